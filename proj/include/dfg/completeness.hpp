#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfg/exhaustion.hpp"
#include "dfg/formal.hpp"

namespace dfg {

/// Per-level upper bounds w_n = 1 − (L_n+α)^{-1}(α + c/m) at the probes,
/// computed as (L_n+α)^{-1}(d_n/m) to avoid cancellation.
struct WBounds {
  double alpha = 0;
  MonotoneLimit limit;               // decreasing
  std::vector<double> max_residual;  // scaled solve residual per level
};

WBounds compute_w(const Family& family, double alpha, std::span<const Index> probes, const Schedule& schedule);

/// w_n on every vertex of one section.
Eigen::VectorXd section_w(const SectionOperator& op, double alpha, double tol = 1e-12);

struct HeatLossCurve {
  std::vector<double> times;
  std::vector<Index> probes;
  std::vector<int> levels;
  // [level][time] → probe vector
  std::vector<std::vector<Eigen::VectorXd>> survival;  // e^{−tL}1
  std::vector<std::vector<Eigen::VectorXd>> killed;    // ∫_0^t e^{−sL}(c/m) ds
  std::vector<std::vector<Eigen::VectorXd>> lost;      // 1 − M_t = ∫_0^t e^{−sL}(d/m) ds
  double max_balance_error = 0;   // |survival + killed + lost − 1|
  double worst_time_monotonicity = 0;  // max (M_s − M_t), s > t
  double worst_level_monotonicity = 0; // max (M_n − M_{n+1})

  Eigen::VectorXd M(std::size_t level_index, std::size_t time_index) const {
    return Eigen::VectorXd::Ones(Index(probes.size())) - lost[level_index][time_index];
  }
};

HeatLossCurve compute_M(const Family& family, std::span<const double> times, std::span<const Index> probes,
                        const Schedule& schedule, double tol = 1e-12);

struct KilledMass {
  std::vector<Index> probes;
  MonotoneLimit limit;   // S_n = L_n^{-1}(c/m), increasing
  double truncation_bound = 0;  // S is computed as an exact potential, no horizon
  double max_interior_residual = 0;  // |L̃S − c/m| on the interior of the final section
};

KilledMass compute_S(const Family& family, std::span<const Index> probes, const Schedule& schedule);

/// S on every vertex of one section: the solution of A S = c/m, zero on
/// components without loss.
Eigen::VectorXd section_S(const Section& section, double tol = 1e-12);

/// A positive bounded subsolution of (L̃+α)l ≤ 0 built along a ray structure.
struct Certificate {
  double alpha = 0;
  long window = 0;
  double normalizer = 1;         // raw l(root) = 1; certificate = raw / normalizer
  double sup_bound = 1;          // rigorous sup of the raw function
  double residual = 0;           // max |(L̃+α)l| / scale on the window (equality part)
  std::vector<Index> probes;
  std::vector<double> probe_values;
  std::vector<std::string> ray_kind;  // "escaping" (tail-bounded) or "minimal"
  Eigen::VectorXd root_data;     // (l(root), l_1(1), ...) after normalisation
  std::string method = "ray recursion";
  /// Certificate value at depth k of ray i (k = 0: root).
  Index root = 0;
  std::vector<std::vector<double>> ray_values;
  std::vector<std::vector<Index>> ray_ids;  // ray_ids[i][k]: family id of depth k (k ≥ 1)
  /// Pointwise values for certificates without ray structure.
  std::map<Index, double> explicit_values;
  double value(Index vertex) const;         // NaN outside the window
};

struct SearchResult {
  std::optional<Certificate> certificate;
  bool supported = true;
  std::string reason;
};

SearchResult subsolution_search(const Family& family, double alpha, long window, std::span<const Index> probes);

enum class Classification { sc_suggested, si_certified, inconclusive };
std::string to_string(Classification c);

struct EquivalenceRow {
  std::string item;
  std::string outcome;  // yes / no / unknown / not evaluated
  std::string evidence;
};

struct EquivalenceTable {
  double alpha = 0;
  std::vector<EquivalenceRow> rows;
  bool consistent = true;
  double laplace_gap = 0;  // max_probe |∫αe^{−αt}(1−M_t)dt − w_n|
  double heat_residual = 0;
  std::string note;
};

struct ClassifyOptions {
  std::vector<double> alphas{0.5, 1.0, 2.0};
  double epsilon = 1e-3;
  long certificate_window = 0;  // 0: final schedule level
};

struct CompletenessReport {
  std::string family;
  std::vector<double> alphas;
  std::vector<Index> probes;
  Schedule schedule;
  std::vector<WBounds> w;
  std::vector<std::optional<Certificate>> certificates;
  std::vector<std::string> certificate_notes;
  std::vector<Classification> votes;
  Classification classification = Classification::inconclusive;
  bool bounded_shortcut = false;
  bool certificates_consistent = true;  // l ≤ w_n at probes
  std::string rationale;
};

/// `external` supplies certificates (one per α, may be empty) for families
/// without ray structure, e.g. the glued function of the extension scenario.
CompletenessReport classify(const Family& family, std::span<const Index> probes, const Schedule& schedule,
                            const ClassifyOptions& options = {},
                            const std::vector<std::optional<Certificate>>& external = {});

EquivalenceTable verify_equivalences(const Family& family, double alpha, std::span<const double> times,
                                     std::span<const Index> probes, const Schedule& schedule,
                                     double epsilon = 1e-3);

/// ∫_0^∞ αe^{−αt} (1 − M_t) dt on one section by tanh-sinh quadrature in u = e^{−αt}.
Eigen::VectorXd laplace_of_heat_loss(const SectionOperator& op, double alpha, std::span<const Index> probes,
                                     double tol = 1e-12);

}  // namespace dfg
