#include "dfg/completeness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "dfg/recursion.hpp"

namespace dfg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd at(const Eigen::VectorXd& v, std::span<const Index> probes) {
  Eigen::VectorXd out(Index(probes.size()));
  for (std::size_t j = 0; j < probes.size(); ++j) out(Index(j)) = v(probes[j]);
  return out;
}
}  // namespace

Eigen::VectorXd section_w(const SectionOperator& op, double alpha, double tol) {
  return solve_resolvent(op, alpha, op.deficiency_rate(), tol).solution;
}

WBounds compute_w(const Family& family, double alpha, std::span<const Index> probes, const Schedule& schedule) {
  if (!(alpha > 0)) throw InputError("compute_w: α must be positive");
  WBounds out;
  out.alpha = alpha;
  out.limit = monotone_limit(
      family, probes, schedule, false,
      [&](const Section&, const SectionOperator& op) {
        auto res = solve_resolvent(op, alpha, op.deficiency_rate(), schedule.solver_tol);
        out.max_residual.push_back(res.residual);
        const Eigen::VectorXd& w = res.solution;
        if (w.maxCoeff() > 1 + 1e-9) throw ConsistencyError("compute_w: w_n exceeds 1");
        return Eigen::VectorXd(w.cwiseMin(1.0));
      },
      2 * schedule.solver_tol);
  return out;
}

HeatLossCurve compute_M(const Family& family, std::span<const double> times, std::span<const Index> probes,
                        const Schedule& schedule, double tol) {
  schedule.check();
  for (double t : times)
    if (!(t >= 0)) throw InputError("compute_M: times must be ≥ 0");
  HeatLossCurve c;
  c.times.assign(times.begin(), times.end());
  c.probes.assign(probes.begin(), probes.end());
  for (int level : schedule.levels) {
    const Section s = family.section(level);
    const SectionOperator op(s);
    std::vector<Eigen::VectorXd> surv, kill, lost;
    Eigen::MatrixXd rates(op.size(), 2);
    rates << op.killing_rate(), op.deficiency_rate();
    for (double t : times) {
      const Eigen::VectorXd e1 = semigroup_apply(op, t, Eigen::VectorXd::Ones(op.size()).eval(), tol);
      const Eigen::MatrixXd integrals = semigroup_integral(op, t, rates, tol);
      surv.push_back(at(e1, probes));
      kill.push_back(at(integrals.col(0), probes).cwiseMax(0.0));
      lost.push_back(at(integrals.col(1), probes).cwiseMax(0.0).cwiseMin(1.0));
      c.max_balance_error = std::max(
          c.max_balance_error,
          (surv.back() + kill.back() + lost.back() - Eigen::VectorXd::Ones(Index(probes.size()))).cwiseAbs().maxCoeff());
    }
    // 1 − M_t is nondecreasing in t (times taken in the given order when sorted).
    for (std::size_t i = 0; i < times.size(); ++i)
      for (std::size_t k = 0; k < times.size(); ++k)
        if (times[k] > times[i])
          c.worst_time_monotonicity = std::max(c.worst_time_monotonicity, (lost[i] - lost[k]).maxCoeff());
    if (!c.lost.empty())
      for (std::size_t i = 0; i < times.size(); ++i)
        c.worst_level_monotonicity = std::max(c.worst_level_monotonicity, (lost[i] - c.lost.back()[i]).maxCoeff());
    c.levels.push_back(level);
    c.survival.push_back(std::move(surv));
    c.killed.push_back(std::move(kill));
    c.lost.push_back(std::move(lost));
    if (family.finite()) break;
  }
  return c;
}

Eigen::VectorXd section_S(const Section& section, double tol) {
  const Graph& g = section.graph;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
  for (const auto& block : connected_components(g)) {
    double kill = 0;
    for (Index x : block) kill += g.killing()(x);
    if (kill == 0) continue;  // S ≡ 0 without killing
    // A restricted to a component with positive loss is invertible.
    const auto sub = dirichlet_subgraph(g, block);
    Eigen::VectorXd d(Index(block.size()));
    for (std::size_t i = 0; i < block.size(); ++i) d(Index(i)) = section.deficiency(block[i]);
    const SectionOperator op(sub.graph, d);  // a component has no cut edges, so c_W = c
    const auto factor = op.factor(0.0);
    if (factor->info() != Eigen::Success) throw SolverError("killed mass: factorization failed", kNaN);
    const Eigen::VectorXd rhs = op.killing_rate();
    Eigen::VectorXd s = factor->solve(op.sqrt_measure().cwiseProduct(rhs)).cwiseQuotient(op.sqrt_measure());
    const Eigen::VectorXd r = rhs - op.apply(s);
    const double scale = op.norm_inf() * s.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
    if (r.lpNorm<Eigen::Infinity>() > 1e3 * tol * scale) throw SolverError("killed mass solve inaccurate", r.lpNorm<Eigen::Infinity>() / scale);
    for (std::size_t i = 0; i < block.size(); ++i) out(block[i]) = std::clamp(s(Index(i)), 0.0, 1.0);
  }
  return out;
}

KilledMass compute_S(const Family& family, std::span<const Index> probes, const Schedule& schedule) {
  KilledMass k;
  k.probes.assign(probes.begin(), probes.end());
  Eigen::VectorXd last;
  Section keep;
  k.limit = monotone_limit(
      family, probes, schedule, true,
      [&](const Section& s, const SectionOperator&) {
        last = section_S(s, schedule.solver_tol);
        keep = s;
        return last;
      },
      1e3 * schedule.solver_tol);
  const Section* final_section = &keep;
  std::vector<Index> interior;
  for (Index x = 0; x < final_section->size(); ++x)
    if (final_section->deficiency(x) == 0) interior.push_back(x);
  if (!interior.empty()) {
    const Eigen::VectorXd ls = apply_formal(final_section->graph, last, final_section->deficiency, interior);
    for (std::size_t i = 0; i < interior.size(); ++i) {
      const Index x = interior[i];
      const double target = final_section->graph.killing()(x) / final_section->graph.measure()(x);
      k.max_interior_residual = std::max(k.max_interior_residual, std::abs(ls(Index(i)) - target));
    }
  }
  return k;
}

// ---------------------------------------------------------------- certificates

double Certificate::value(Index vertex) const {
  if (!explicit_values.empty()) {
    auto it = explicit_values.find(vertex);
    return it == explicit_values.end() ? kNaN : it->second;
  }
  if (vertex == root) return ray_values.empty() ? kNaN : ray_values[0][0];
  for (std::size_t i = 0; i < ray_ids.size(); ++i)
    for (std::size_t k = 1; k < ray_ids[i].size(); ++k)
      if (ray_ids[i][k] == vertex) return ray_values[i][k];
  return kNaN;
}

SearchResult subsolution_search(const Family& family, double alpha, long window, std::span<const Index> probes) {
  if (!(alpha > 0)) throw InputError("subsolution search: α must be positive");
  SearchResult out;
  if (family.finite()) {
    out.reason = "finite graph: the minimum principle rules out a nontrivial bounded subsolution";
    return out;
  }
  if (window < 4) throw InputError("subsolution search: window must be ≥ 4");
  const auto rs = family.rays();
  if (!rs) {
    out.supported = false;
    out.reason = "family has no ray structure";
    return out;
  }
  const std::size_t r = rs->rays.size();
  std::vector<std::vector<double>> values(r);
  std::vector<bool> escaping(r, false);
  double need = rs->root_killing + alpha * rs->root_measure, escaping_weight = 0;
  for (std::size_t i = 0; i < r; ++i) {
    const auto& ray = rs->rays[i];
    if (ray.tail && ray.tail(window)) {
      escaping[i] = true;
      escaping_weight += ray.weight(0);
    } else {
      auto psi = backward_solution<double>(ray.weight, ray.measure, ray.killing, alpha, window);
      const double head = psi[0];
      for (double& v : psi) v /= head;
      need += ray.weight(0) * (1 - psi[1]);
      values[i] = std::move(psi);
    }
  }
  if (escaping_weight == 0) {
    out.reason = "no ray carries a bounded increasing solution; on every ray the solutions either grow "
                 "without bound or decay, so the root equation cannot be met";
    return out;
  }
  const double slope = 1 + need / escaping_weight;
  double sup = 1;
  for (std::size_t i = 0; i < r; ++i) {
    if (!escaping[i]) {
      sup = std::max(sup, *std::max_element(values[i].begin(), values[i].end()));
      continue;
    }
    const auto& ray = rs->rays[i];
    auto l = forward_solution<double>(ray.weight, ray.measure, ray.killing, alpha, 1.0, slope, window);
    for (long k = 1; k <= window; ++k)
      if (!(l[k] >= l[k - 1]) || !std::isfinite(l[k])) {
        out.reason = "forward solution on ray " + ray.name + " is not increasing";
        return out;
      }
    const TailBound tb = *ray.tail(window);
    const double kappa = tb.sup_killing + alpha * tb.sup_measure;
    if (kappa * tb.weighted_inv_weight_sum >= 1) {
      out.reason = "tail bound on ray " + ray.name + " does not close at the window; enlarge it";
      return out;
    }
    const double flux = ray.weight(window - 1) * (l[window] - l[window - 1]);
    const double bound = (l[window] + flux * tb.inv_weight_sum) / (1 - kappa * tb.weighted_inv_weight_sum);
    sup = std::max(sup, bound);
    values[i] = std::move(l);
  }

  Certificate cert;
  cert.alpha = alpha;
  cert.window = window;
  cert.sup_bound = sup;
  cert.normalizer = sup;
  cert.root = rs->root;
  cert.root_data = Eigen::VectorXd(Index(r) + 1);
  cert.root_data(0) = 1 / sup;
  // Residual of the equality (L̃+α)l = 0 along the rays, relative to the
  // size of the terms.
  double root_eq = (rs->root_killing + alpha * rs->root_measure), root_scale = std::abs(root_eq);
  for (std::size_t i = 0; i < r; ++i) {
    const auto& ray = rs->rays[i];
    const auto& l = values[i];
    cert.ray_kind.push_back(escaping[i] ? "escaping" : "minimal");
    cert.root_data(Index(i) + 1) = l[1] / sup;
    root_eq += ray.weight(0) * (1 - l[1]);
    root_scale += ray.weight(0) * (1 + l[1]);
    const long last = escaping[i] ? window : window - 1;
    for (long k = 1; k < last; ++k) {
      const double bp = ray.weight(k - 1), bn = ray.weight(k);
      const double term = bp * (l[k] - l[k - 1]) + bn * (l[k] - l[k + 1]) + (ray.killing(k) + alpha * ray.measure(k)) * l[k];
      const double scale = bp * (l[k] + l[k - 1]) + bn * (l[k] + l[k + 1]) + (ray.killing(k) + alpha * ray.measure(k)) * l[k];
      cert.residual = std::max(cert.residual, std::abs(term) / scale);
    }
    std::vector<double> scaled(l.size());
    std::transform(l.begin(), l.end(), scaled.begin(), [sup](double v) { return v / sup; });
    cert.ray_values.push_back(std::move(scaled));
    std::vector<Index> ids(window + 1, rs->root);
    for (long k = 1; k <= window; ++k) ids[k] = ray.vertex(k);
    cert.ray_ids.push_back(std::move(ids));
  }
  cert.residual = std::max(cert.residual, std::abs(root_eq) / root_scale);
  for (Index p : probes) {
    cert.probes.push_back(p);
    cert.probe_values.push_back(cert.value(p));
  }
  out.certificate = std::move(cert);
  out.reason = "bounded positive solution along the rays";
  return out;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::sc_suggested: return "SC-suggested";
    case Classification::si_certified: return "SI-certified-heuristic";
    case Classification::inconclusive: return "inconclusive";
  }
  return "";
}

CompletenessReport classify(const Family& family, std::span<const Index> probes, const Schedule& schedule,
                            const ClassifyOptions& options, const std::vector<std::optional<Certificate>>& external) {
  if (options.alphas.empty()) throw InputError("classify: α-list must be nonempty");
  CompletenessReport rep;
  rep.family = family.name();
  rep.alphas = options.alphas;
  rep.probes.assign(probes.begin(), probes.end());
  rep.schedule = schedule;
  rep.bounded_shortcut = family.tail().sup_rate.has_value();
  const long window = options.certificate_window > 0 ? options.certificate_window : schedule.levels.back();
  for (std::size_t a = 0; a < options.alphas.size(); ++a) {
    const double alpha = options.alphas[a];
    rep.w.push_back(compute_w(family, alpha, probes, schedule));
    std::optional<Certificate> cert;
    std::string note;
    if (a < external.size() && external[a]) {
      cert = external[a];
      note = "supplied certificate (" + cert->method + ")";
    } else {
      auto search = subsolution_search(family, alpha, window, probes);
      cert = search.certificate;
      note = search.reason;
    }
    const Eigen::VectorXd wn = rep.w.back().limit.final_values();
    double best = 0;
    if (cert)
      for (std::size_t j = 0; j < probes.size(); ++j) {
        const double l = cert->value(probes[j]);
        if (std::isnan(l)) continue;
        best = std::max(best, l);
        if (l > wn(Index(j)) + 1e-9) rep.certificates_consistent = false;
      }
    Classification vote = Classification::inconclusive;
    if (wn.maxCoeff() < options.epsilon) vote = Classification::sc_suggested;
    else if (cert && best > options.epsilon) vote = Classification::si_certified;
    rep.votes.push_back(vote);
    rep.certificates.push_back(std::move(cert));
    rep.certificate_notes.push_back(std::move(note));
  }
  const bool agree = std::all_of(rep.votes.begin(), rep.votes.end(), [&](Classification c) { return c == rep.votes[0]; });
  if (rep.bounded_shortcut) {
    rep.classification = Classification::sc_suggested;
    rep.rationale = "bounded operator: sup (Σb + c)/m is finite";
    if (std::find(rep.votes.begin(), rep.votes.end(), Classification::si_certified) != rep.votes.end()) {
      rep.certificates_consistent = false;
      rep.rationale += "; contradicts a certificate";
    }
  } else if (agree) {
    rep.classification = rep.votes[0];
    rep.rationale = rep.classification == Classification::sc_suggested ? "w_n below ε at every probe for every α"
                    : rep.classification == Classification::si_certified
                        ? "bounded positive subsolution with values above ε for every α"
                        : "neither w_n < ε nor a certificate above ε";
  } else {
    rep.classification = Classification::inconclusive;
    rep.rationale = "outcomes differ across α";
  }
  return rep;
}

Eigen::VectorXd laplace_of_heat_loss(const SectionOperator& op, double alpha, std::span<const Index> probes,
                                     double tol) {
  // in u = e^{−αt} the integrand approaches its t → ∞ limit like u^{λ_1/α}: an algebraic endpoint
  // singularity, which tanh-sinh absorbs; nodes are shared across probes
  const Eigen::VectorXd g = op.deficiency_rate();
  std::map<double, Eigen::VectorXd> cache;
  auto lost = [&](double u) -> const Eigen::VectorXd& {
    auto it = cache.find(u);
    if (it == cache.end()) {
      const double t = u >= 1 ? 0.0 : -std::log(u) / alpha;
      it = cache.emplace(u, at(semigroup_integral(op, t, g, tol), probes)).first;
    }
    return it->second;
  };
  boost::math::quadrature::tanh_sinh<double> rule;
  const double rel = std::max(tol, 64 * std::numeric_limits<double>::epsilon());
  Eigen::VectorXd acc(Index(probes.size()));
  for (Index i = 0; i < acc.size(); ++i)
    acc(i) = rule.integrate([&](double u) { return lost(u)(i); }, 0.0, 1.0, rel);
  return acc;
}

EquivalenceTable verify_equivalences(const Family& family, double alpha, std::span<const double> times,
                                     std::span<const Index> probes, const Schedule& schedule, double epsilon) {
  EquivalenceTable tab;
  tab.alpha = alpha;
  const WBounds w = compute_w(family, alpha, probes, schedule);
  const Eigen::VectorXd wn = w.limit.final_values();
  const auto search = subsolution_search(family, alpha, schedule.levels.back(), probes);
  Schedule last = schedule;
  last.levels = {w.limit.levels.back()};
  const HeatLossCurve M = compute_M(family, times, probes, last);
  const Section s = family.section(last.levels[0]);
  const SectionOperator op(s);

  auto yn = [](bool b) { return std::string(b ? "yes" : "no"); };
  std::string i_out = "unknown", iii_out = "unknown", i_ev = search.reason;
  if (search.certificate) {
    i_out = "yes";
    iii_out = search.certificate->residual < 1e-8 ? "yes" : "unknown";
  } else if (search.supported) {
    i_out = iii_out = "no";
  }
  tab.rows.push_back({"(i) bounded nonnegative l with (L+a)l <= 0", i_out, i_ev});
  tab.rows.push_back({"(ii) bounded l with (L+a)l = 0", "not evaluated", "sign-indefinite search not implemented"});
  tab.rows.push_back({"(iii) bounded nonnegative l with (L+a)l = 0", iii_out,
                      search.certificate ? "relative residual " + std::to_string(search.certificate->residual) : i_ev});
  tab.rows.push_back({"(iv) w nontrivial", yn(wn.maxCoeff() > epsilon), "max w_n = " + std::to_string(wn.maxCoeff())});
  double max_lost = 0;
  for (const auto& v : M.lost.back()) max_lost = std::max(max_lost, v.maxCoeff());
  tab.rows.push_back({"(v) M_t(x) < 1 somewhere", yn(max_lost > epsilon), "max 1-M_t = " + std::to_string(max_lost)});

  // (vi): N = 1 − M with N_0 = 0, heat equation at the probes, and its
  // α-Laplace transform reproducing w_n.
  const double horizon = times.empty() ? 1.0 : *std::max_element(times.begin(), times.end());
  const int steps = 64;
  const double dt = horizon / steps;
  Eigen::MatrixXd samples(op.size(), steps + 1);
  for (int k = 0; k <= steps; ++k) samples.col(k) = semigroup_integral(op, k * dt, op.deficiency_rate(), 1e-12);
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const Index x = probes[j];
    double scale = 0;
    for (int k = 0; k <= steps; ++k) scale = std::max(scale, std::abs(samples(x, k)));
    if (scale == 0) continue;
    for (int k = 1; k < steps; ++k) {
      const double dn = (samples(x, k + 1) - samples(x, k - 1)) / (2 * dt);
      const double ln = op.apply(samples.col(k))(x) - op.deficiency_rate()(x);
      tab.heat_residual = std::max(tab.heat_residual, std::abs(dn + ln) / scale);
    }
  }
  const Eigen::VectorXd lap = laplace_of_heat_loss(op, alpha, probes);
  tab.laplace_gap = (lap - wn).cwiseAbs().maxCoeff();
  const bool heat_ok = tab.heat_residual < 1e-2 && tab.laplace_gap < 1e-3;
  std::string vi = max_lost > epsilon ? (heat_ok ? "yes" : "unknown") : "no";
  tab.rows.push_back({"(vi) nontrivial bounded heat solution with N_0 = 0", vi,
                      "relative heat residual " + std::to_string(tab.heat_residual) + ", Laplace gap " +
                          std::to_string(tab.laplace_gap)});
  std::string first;
  for (const auto& row : tab.rows) {
    if (row.outcome != "yes" && row.outcome != "no") continue;
    if (first.empty()) first = row.outcome;
    else if (row.outcome != first) tab.consistent = false;
  }
  if (!tab.consistent) tab.note = "outcomes disagree: insufficient schedule or a defect";
  return tab;
}

}  // namespace dfg
