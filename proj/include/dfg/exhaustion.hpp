#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dfg/section.hpp"

namespace dfg {

struct Schedule {
  std::vector<int> levels;
  double solver_tol = 1e-12;
  double plateau = 1e-6;
  double ceiling = 1e12;

  /// first, 2·first, 4·first, ... up to and including `last`.
  static Schedule doubling(int first, int last);
  void check() const;
};

enum class LimitStatus { exact, converged, rising, diverging };
std::string to_string(LimitStatus s);

/// Per-probe monotone sequence over the schedule's levels. Values are
/// certified one-sided bounds of the limit: lower bounds when increasing,
/// upper bounds when decreasing.
struct MonotoneLimit {
  std::vector<Index> probes;
  std::vector<int> levels;
  std::vector<Index> sizes;
  Eigen::MatrixXd values;  // levels × probes
  bool increasing = true;
  std::vector<LimitStatus> status;
  std::vector<double> last_gap;  // |u_final − u_previous| per probe
  double worst_monotonicity = 0;  // largest step against the expected direction

  Eigen::VectorXd final_values() const { return values.row(values.rows() - 1).transpose(); }
};

using SectionFunction = std::function<Eigen::VectorXd(const Section&)>;
/// Per-level evaluation on a section; returns values at every section vertex.
using LevelEvaluation = std::function<Eigen::VectorXd(const Section&, const SectionOperator&)>;

/// Drives `eval` over the schedule and applies the plateau, divergence and
/// monotonicity rules. Throws ConsistencyError when monotonicity fails by more
/// than `slack`·(1 + |u|).
MonotoneLimit monotone_limit(const Family& family, std::span<const Index> probes, const Schedule& schedule,
                             bool increasing, const LevelEvaluation& eval, double slack);

/// lim (L_{K_n}+α)^{-1} f_n at the probes (f ≥ 0 restricted to K_n).
MonotoneLimit extended_resolvent(const Family& family, double alpha, const SectionFunction& f,
                                 std::span<const Index> probes, const Schedule& schedule);

/// lim e^{−tL_{K_n}} f_n at the probes (0 ≤ f bounded).
MonotoneLimit extended_semigroup(const Family& family, double t, const SectionFunction& f,
                                 std::span<const Index> probes, const Schedule& schedule);

SectionFunction constant_function(double value);
SectionFunction indicator(Index vertex);

enum class ExcessiveVerdict { pass, fail, hypotheses_not_met };
std::string to_string(ExcessiveVerdict v);

struct ExcessiveReport {
  ExcessiveVerdict verdict = ExcessiveVerdict::pass;
  std::string message;
  double worst_excess = 0;  // max over checks of (operator value − u)/(1 + |u|)
};

/// For u ≥ 0 with L̃u ≥ 0: e^{−tL}u ≤ u and α(L+α)^{-1}u ≤ u at the probes,
/// through the section approximations of the schedule's final level. L̃u ≥ 0 is
/// verified on the interior of that section.
ExcessiveReport excessive_check(const Family& family, const SectionFunction& u, std::span<const Index> probes,
                                std::span<const double> times, std::span<const double> alphas,
                                const Schedule& schedule, double tol = 1e-9);

}  // namespace dfg
