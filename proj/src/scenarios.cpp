#include "dfg/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dfg/recursion.hpp"

namespace dfg {

SupergraphReport supergraph_scenario(const FamilyPtr& base, const Schedule& schedule, const ClassifyOptions& options,
                                        bool single_vertex) {
  DecoratedFamily::Options o;
  o.shape = single_vertex ? DecoratedFamily::Shape::whisker : DecoratedFamily::Shape::ray;
  o.length = 1;
  o.lumped = true;
  auto super = std::make_shared<DecoratedFamily>(base, o);

  SupergraphReport rep;
  rep.base = base->name();
  rep.supergraph = super->name();
  rep.probes = super->default_probes();
  const auto base_probes = base->default_probes();
  rep.base_report = classify(*base, base_probes, schedule, options);
  rep.super_report = classify(*super, rep.probes, schedule, options);
  for (const auto& w : rep.super_report.w) {
    bool dec = true;
    for (Index l = 1; l < w.limit.values.rows(); ++l) dec = dec && w.limit.values(l, 0) <= w.limit.values(l - 1, 0);
    rep.decreasing.push_back(dec);
  }

  const Section s = super->section(schedule.levels.back());
  const SectionOperator op(s);
  const Index root = rep.probes.front();
  std::vector<std::pair<long, Index>> ray;
  for (Index x = 0; x < s.size(); ++x)
    if (s.tags[x].ray == 0 && s.tags[x].base == s.tags[root].base) ray.emplace_back(s.tags[x].depth, x);
  std::sort(ray.begin(), ray.end());
  for (double alpha : options.alphas) {
    const Eigen::VectorXd w = section_w(op, alpha, schedule.solver_tol);
    RayProfile p;
    p.alpha = alpha;
    p.base_vertex = root;
    p.threshold = 2 / (2 + alpha);
    p.values.push_back(w(root));
    for (const auto& [depth, x] : ray) p.values.push_back(w(x));
    for (std::size_t k = 1; k < p.values.size(); ++k) {
      if (p.values[k - 1] <= 0) break;
      const double ratio = p.values[k] / p.values[k - 1];
      p.max_ratio = std::max(p.max_ratio, ratio);
      if (ratio >= p.threshold) p.decays = false;
    }
    p.growth_after_crossing = check_ray_growth<double>(alpha, 1.0, p.threshold, 50).holds;
    rep.rays.push_back(std::move(p));
  }
  return rep;
}

ExtensionReport extension_scenario(const FamilyPtr& base, const ExtensionOptions& ext, const Schedule& schedule,
                                       const ClassifyOptions& options) {
  DecoratedFamily::Options o;
  o.shape = DecoratedFamily::Shape::whisker;
  o.length = ext.whisker_length;
  o.lumped = false;
  o.multiplicity.rule = Multiplicity::Rule::stride;
  o.multiplicity.stride = ext.stride;
  auto V = std::make_shared<DecoratedFamily>(base, o);
  auto W = std::make_shared<CutFamily>(V);

  ExtensionReport rep;
  rep.V = V->name();
  rep.W = W->name();
  rep.slack = ext.slack;
  const auto w_probes = W->default_probes();
  rep.subgraph_report = classify(*W, w_probes, schedule, options);
  if (rep.subgraph_report.classification != Classification::si_certified) {
    rep.skipped = true;
    rep.note = "Dirichlet subgraph on W is not certified SI; scenario skipped";
    return rep;
  }
  if (schedule.levels.back() < ext.window + 1) throw InputError("extension: schedule must reach the window");

  const int level = ext.window + 1;
  const Section s = V->section(level);
  const auto base_ids = V->base_ids(level);  // base id → V id
  std::vector<Index> base_of(s.size(), -1);
  for (std::size_t b = 0; b < base_ids.size(); ++b) base_of[base_ids[b]] = Index(b);

  std::vector<Index> outside;  // V∖W within the section
  for (Index x = 0; x < s.size(); ++x)
    if (base_of[x] < 0) outside.push_back(x);
  const auto sub = dirichlet_subgraph(s.graph, outside);
  const SectionOperator sub_op(sub.graph, Eigen::VectorXd::Zero(sub.graph.size()));

  std::vector<std::optional<Certificate>> glued;
  for (std::size_t a = 0; a < options.alphas.size(); ++a) {
    const double alpha = options.alphas[a];
    const auto& cert = rep.subgraph_report.certificates[a];
    ExtensionCheck chk;
    chk.alpha = alpha;
    chk.cases = {CaseTally{"interior of W"}, CaseTally{"boundary of V\\W inside W"}, CaseTally{"outer boundary of W"},
                 CaseTally{"interior of V\\W"}};
    if (!cert) {
      glued.emplace_back();
      rep.checks.push_back(chk);
      continue;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(s.size());
    for (Index x = 0; x < s.size(); ++x)
      if (base_of[x] >= 0) v(x) = cert->value(base_of[x]);
    if (!v.allFinite()) throw ConsistencyError("extension: certificate window smaller than evaluation window");
    // ψ(p) = (1/m(p)) Σ_{y∈W} b(p,y) u(y);  0 ≤ φ ≤ ψ, φ > 0 where ψ > 0.
    Eigen::VectorXd phi(Index(outside.size()));
    for (std::size_t i = 0; i < outside.size(); ++i) {
      const Index p = outside[i];
      double psi = 0;
      s.graph.for_each_neighbor(p, [&](Index y, double b) {
        if (base_of[y] >= 0) psi += b * v(y);
      });
      psi /= s.graph.measure()(p);
      phi(Index(i)) = std::min(psi, std::pow(ext.taper, double(s.tags[p].base)));
    }
    const Eigen::VectorXd ubar = solve_resolvent(sub_op, alpha, phi, schedule.solver_tol).solution;
    for (std::size_t i = 0; i < outside.size(); ++i) v(outside[i]) = ubar(Index(i));

    std::vector<Index> window;
    for (Index x = 0; x < s.size(); ++x)
      if (s.deficiency(x) == 0) window.push_back(x);
    const Eigen::VectorXd lv = apply_formal(s.graph, v, s.deficiency, window);
    for (std::size_t i = 0; i < window.size(); ++i) {
      const Index x = window[i];
      bool touches_other = false;
      s.graph.for_each_neighbor(x, [&](Index y, double) { touches_other = touches_other || ((base_of[y] >= 0) != (base_of[x] >= 0)); });
      const int kind = base_of[x] >= 0 ? (touches_other ? 1 : 0) : (touches_other ? 2 : 3);
      const double value = lv(Index(i)) + alpha * v(x);
      auto& c = chk.cases[kind];
      ++c.count;
      c.max_value = std::max(c.max_value, value);
      if (value > ext.slack) ++c.violations;
    }
    chk.window_vertices = Index(window.size());
    // ū ≤ sup φ/α ≤ 1/α and u ≤ 1, so v / max(1, 1/α) ≤ 1 on all of V.
    chk.normalizer = std::max(1.0, 1 / alpha);
    Certificate g;
    g.alpha = alpha;
    g.method = "glued extension";
    g.window = ext.window;
    g.normalizer = chk.normalizer;
    g.residual = 0;
    for (std::size_t b = 0; b < base_ids.size(); ++b) g.explicit_values[base_ids[b]] = v(base_ids[b]) / chk.normalizer;
    for (Index p : outside) g.explicit_values[p] = v(p) / chk.normalizer;
    glued.emplace_back(std::move(g));
    rep.checks.push_back(chk);
  }
  rep.V_report = classify(*V, V->default_probes(), schedule, options, glued);
  return rep;
}

}  // namespace dfg
