#include "dfg/exhaustion.hpp"

#include <cmath>

#include "dfg/formal.hpp"

namespace dfg {

Schedule Schedule::doubling(int first, int last) {
  if (first < 1 || last < first) throw InputError("schedule: need 1 ≤ first ≤ last");
  Schedule s;
  for (long n = first; n < last; n *= 2) s.levels.push_back(int(n));
  s.levels.push_back(last);
  return s;
}

void Schedule::check() const {
  if (levels.empty()) throw InputError("schedule: no levels");
  if (levels.front() < 1) throw InputError("schedule: levels must be ≥ 1");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1]) throw InputError("schedule: levels must be strictly increasing");
  if (!(solver_tol > 0) || !(plateau > 0) || !(ceiling > 0)) throw InputError("schedule: tolerances must be positive");
}

std::string to_string(LimitStatus s) {
  switch (s) {
    case LimitStatus::exact: return "exact";
    case LimitStatus::converged: return "converged";
    case LimitStatus::rising: return "still-moving";
    case LimitStatus::diverging: return "diverging";
  }
  return "";
}

MonotoneLimit monotone_limit(const Family& family, std::span<const Index> probes, const Schedule& schedule,
                             bool increasing, const LevelEvaluation& eval, double slack) {
  schedule.check();
  MonotoneLimit out;
  out.probes.assign(probes.begin(), probes.end());
  out.increasing = increasing;
  const Index np = Index(probes.size());
  out.values.resize(Index(schedule.levels.size()), np);
  for (std::size_t li = 0; li < schedule.levels.size(); ++li) {
    const int level = schedule.levels[li];
    const Section s = family.section(level);
    for (Index p : probes)
      if (p < 0 || p >= s.size())
        throw InputError("probe " + std::to_string(p) + " is not in the section at level " + std::to_string(level));
    const SectionOperator op(s);
    const Eigen::VectorXd u = eval(s, op);
    out.levels.push_back(level);
    out.sizes.push_back(s.size());
    for (Index j = 0; j < np; ++j) out.values(Index(li), j) = u(probes[j]);
    if (li > 0) {
      for (Index j = 0; j < np; ++j) {
        const double prev = out.values(Index(li) - 1, j), cur = out.values(Index(li), j);
        const double against = increasing ? prev - cur : cur - prev;
        out.worst_monotonicity = std::max(out.worst_monotonicity, against);
        if (against > slack * (1 + std::abs(cur)))
          throw ConsistencyError("domain monotonicity violated at probe " + std::to_string(probes[j]) + " between levels " +
                                 std::to_string(schedule.levels[li - 1]) + " and " + std::to_string(level));
      }
    }
    if (family.finite()) break;  // every section already is the whole graph
  }
  out.values.conservativeResize(Index(out.levels.size()), np);
  for (Index j = 0; j < np; ++j) {
    const Index last = Index(out.levels.size()) - 1;
    const double v = out.values(last, j);
    const double g1 = last >= 1 ? std::abs(v - out.values(last - 1, j)) : INFINITY;
    const double g2 = last >= 2 ? std::abs(out.values(last - 1, j) - out.values(last - 2, j)) : INFINITY;
    out.last_gap.push_back(g1);
    if (family.finite()) out.status.push_back(LimitStatus::exact);
    else if (!std::isfinite(v) || std::abs(v) > schedule.ceiling) out.status.push_back(LimitStatus::diverging);
    else if (g1 < schedule.plateau && g2 < schedule.plateau) out.status.push_back(LimitStatus::converged);
    else out.status.push_back(LimitStatus::rising);
  }
  return out;
}

MonotoneLimit extended_resolvent(const Family& family, double alpha, const SectionFunction& f,
                                 std::span<const Index> probes, const Schedule& schedule) {
  if (!(alpha > 0)) throw InputError("extended resolvent: α must be positive");
  return monotone_limit(
      family, probes, schedule, true,
      [&](const Section& s, const SectionOperator& op) {
        const Eigen::VectorXd fn = f(s);
        if (fn.size() != s.size()) throw InputError("extended resolvent: function size mismatch");
        if (fn.minCoeff() < 0) throw InputError("extended resolvent: f must be nonnegative (split signed f)");
        return solve_resolvent(op, alpha, fn, schedule.solver_tol).solution;
      },
      2 * schedule.solver_tol);
}

MonotoneLimit extended_semigroup(const Family& family, double t, const SectionFunction& f,
                                 std::span<const Index> probes, const Schedule& schedule) {
  if (!(t >= 0)) throw InputError("extended semigroup: t must be ≥ 0");
  return monotone_limit(
      family, probes, schedule, true,
      [&](const Section& s, const SectionOperator& op) {
        const Eigen::VectorXd fn = f(s);
        if (fn.size() != s.size()) throw InputError("extended semigroup: function size mismatch");
        if (fn.minCoeff() < 0) throw InputError("extended semigroup: f must be nonnegative");
        return semigroup_apply(op, t, fn, schedule.solver_tol);
      },
      // The contour error is relative to ‖f‖∞ rather than a backward error.
      std::max(2 * schedule.solver_tol, 1e-11));
}

SectionFunction constant_function(double value) {
  return [value](const Section& s) { return Eigen::VectorXd::Constant(s.size(), value); };
}

SectionFunction indicator(Index vertex) {
  return [vertex](const Section& s) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(s.size());
    if (vertex < s.size()) v(vertex) = 1;
    return v;
  };
}

std::string to_string(ExcessiveVerdict v) {
  switch (v) {
    case ExcessiveVerdict::pass: return "pass";
    case ExcessiveVerdict::fail: return "fail";
    case ExcessiveVerdict::hypotheses_not_met: return "hypotheses not met";
  }
  return "";
}

ExcessiveReport excessive_check(const Family& family, const SectionFunction& u, std::span<const Index> probes,
                                std::span<const double> times, std::span<const double> alphas,
                                const Schedule& schedule, double tol) {
  schedule.check();
  ExcessiveReport r;
  const Section s = family.section(schedule.levels.back());
  const Eigen::VectorXd un = u(s);
  if (un.size() != s.size()) throw InputError("excessive check: function size mismatch");
  if (un.minCoeff() < 0) {
    r.verdict = ExcessiveVerdict::hypotheses_not_met;
    r.message = "u has negative values";
    return r;
  }
  std::vector<Index> interior;
  for (Index x = 0; x < s.size(); ++x)
    if (s.deficiency(x) == 0) interior.push_back(x);
  const Eigen::VectorXd lu = apply_formal(s.graph, un, s.deficiency, interior);
  const SectionOperator op(s);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const Index x = interior[i];
    const double scale = 1 + op.norm_inf() * std::abs(un(x));
    if (lu(Index(i)) < -tol * scale) {
      r.verdict = ExcessiveVerdict::hypotheses_not_met;
      r.message = "L̃u < 0 at vertex " + std::to_string(x);
      return r;
    }
  }
  auto record = [&](const Eigen::VectorXd& value, const std::string& what) {
    for (Index p : probes) {
      const double excess = (value(p) - un(p)) / (1 + std::abs(un(p)));
      r.worst_excess = std::max(r.worst_excess, excess);
      if (excess > tol && r.verdict == ExcessiveVerdict::pass) {
        r.verdict = ExcessiveVerdict::fail;
        r.message = what + " exceeds u at vertex " + std::to_string(p);
      }
    }
  };
  for (double t : times) record(semigroup_apply(op, t, un, schedule.solver_tol), "e^{-tL}u (t=" + std::to_string(t) + ")");
  for (double a : alphas)
    record(a * solve_resolvent(op, a, un, schedule.solver_tol).solution, "α(L+α)^{-1}u (α=" + std::to_string(a) + ")");
  return r;
}

}  // namespace dfg
