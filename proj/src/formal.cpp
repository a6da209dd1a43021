#include "dfg/formal.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "dfg/recursion.hpp"
#include "dfg/section.hpp"

namespace dfg {

std::string to_string(Tristate t) {
  switch (t) {
    case Tristate::yes: return "yes";
    case Tristate::no: return "no";
    case Tristate::unknown: return "unknown";
  }
  return "unknown";
}

MinPrincipleReport check_min_principle(const Section& section, const Eigen::VectorXd& u, double alpha,
                                       std::span<const Index> U, double tol) {
  const Graph& g = section.graph;
  const auto inU = detail::membership(g.size(), U);
  const Eigen::VectorXd lu = apply_formal(g, u, section.deficiency, U);
  const double scale = std::max(1.0, u.lpNorm<Eigen::Infinity>()) *
                       std::max(1.0, SectionOperator(section).norm_inf() + alpha);
  MinPrincipleReport r;
  for (std::size_t i = 0; i < U.size(); ++i)
    if (lu(Index(i)) + alpha * u(U[i]) < -tol * scale) {
      r.verdict = MinPrinciple::hypotheses_not_met;
      r.witness = U[i];
      r.message = "(L+α)u < 0 at " + g.name(U[i]);
      return r;
    }
  for (Index x = 0; x < g.size(); ++x)
    if (!inU[x] && u(x) < 0) {
      r.verdict = MinPrinciple::hypotheses_not_met;
      r.witness = x;
      r.message = "u < 0 outside U at " + g.name(x);
      return r;
    }
  const double zero = tol * std::max(1.0, u.lpNorm<Eigen::Infinity>());
  for (Index x = 0; x < g.size(); ++x)
    if (u(x) < -zero) {
      r.verdict = MinPrinciple::fail;
      r.witness = x;
      r.message = "negative value at " + g.name(x);
      return r;
    }
  // Components of the subgraph induced on U.
  std::vector<Index> sorted(U.begin(), U.end());
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty()) {
    const auto sub = dirichlet_subgraph(g, sorted);
    for (const auto& block : connected_components(sub.graph)) {
      bool any_zero = false, any_positive = false;
      Index zero_at = -1;
      for (Index i : block) {
        const double v = u(sub.vertices[i]);
        if (v > zero) any_positive = true;
        else {
          any_zero = true;
          zero_at = sub.vertices[i];
        }
      }
      if (any_zero && any_positive) {
        r.verdict = MinPrinciple::fail;
        r.witness = zero_at;
        r.message = "zero inside a component where u is positive, at " + g.name(zero_at);
        return r;
      }
    }
  }
  if (u.cwiseAbs().maxCoeff() <= zero) {
    r.verdict = MinPrinciple::pass_identically_zero;
    r.message = "identically zero";
  }
  return r;
}

ConditionAReport check_condition_A(const Family& family) {
  const TailMetadata t = family.tail();
  ConditionAReport r;
  if (!t.declared) {
    r.reason = "tail behaviour not declared";
    return r;
  }
  if (t.inf_measure && *t.inf_measure > 0) {
    r.verdict = Tristate::yes;
    r.reason = "inf m > 0";
    return r;
  }
  for (const auto& ray : t.rays) {
    if (!ray.summable) continue;
    r.verdict = Tristate::no;
    r.ray = ray.ray;
    r.reason = "measure summable along ray " + ray.ray;
    double acc = 0;
    long next = 1;
    for (long k = 1; k <= 1024; ++k) {
      acc += ray.measure(k);
      if (k == next) {
        r.partial_sums.emplace_back(k, acc);
        next *= 2;
      }
    }
    return r;
  }
  r.verdict = Tristate::yes;
  r.reason = t.rays.empty() ? "no infinite path of distinct vertices is declared" : "measure diverges along every declared ray";
  return r;
}

namespace {

struct PartialSums {
  double quarter = 0, half = 0, full = 0;
  bool bounded() const {
    if (!std::isfinite(full)) return false;
    if (full == 0) return true;
    // the last doubling adds almost nothing and adds less than the one before
    return (full - half) / full < 1e-6 && full - half <= half - quarter;
  }
};

PartialSums lp_sums(const RayTemplate& ray, const std::vector<double>& u, double p, long window) {
  PartialSums s;
  double acc = 0;
  for (long k = 1; k <= window; ++k) {
    acc += ray.measure(k) * std::pow(std::abs(u[k]), p);
    if (k == window / 4) s.quarter = acc;
    if (k == window / 2) s.half = acc;
  }
  s.full = acc;
  return s;
}

}  // namespace

LpReport check_lp_uniqueness(const Family& family, double alpha, double p, long window) {
  if (!(alpha > 0)) throw InputError("ℓ^p check: α must be positive");
  if (!(p >= 1)) throw InputError("ℓ^p check: p must be ≥ 1");
  if (window < 8) throw InputError("ℓ^p check: window must be ≥ 8");
  LpReport report;
  const auto rs = family.rays();
  if (!rs) {
    report.reason = "family has no ray structure";
    return report;
  }
  const Index r = Index(rs->rays.size());
  // Unknowns: u(root), u_i(1). Constraints collected as rows.
  std::vector<Eigen::RowVectorXd> rows;
  Eigen::RowVectorXd root = Eigen::RowVectorXd::Zero(r + 1);
  root(0) = rs->root_killing + alpha * rs->root_measure;
  for (Index i = 0; i < r; ++i) {
    root(0) += rs->rays[i].weight(0);
    root(i + 1) = -rs->rays[i].weight(0);
  }
  rows.push_back(root);

  std::vector<std::vector<double>> minimal(r);
  for (Index i = 0; i < r; ++i) {
    const auto& ray = rs->rays[i];
    auto run = [&](double u0, double u1) {
      return forward_solution<double>(ray.weight, ray.measure, ray.killing, alpha, u0, u1, window);
    };
    const auto phi = run(1, 0), chi = run(0, 1);
    auto psi = backward_solution<double>(ray.weight, ray.measure, ray.killing, alpha, 4 * window);
    const double head = psi[0];
    for (double& v : psi) v /= head;
    psi.resize(window + 1);
    minimal[i] = psi;
    const bool finite = std::all_of(phi.begin(), phi.end(), [](double v) { return std::isfinite(v); }) &&
                        std::all_of(chi.begin(), chi.end(), [](double v) { return std::isfinite(v); });
    if (!finite) {
      report.reason = "recursion overflow on ray " + ray.name + "; reduce the window";
      return report;
    }
    int dim = 0;
    if (lp_sums(ray, phi, p, window).bounded() && lp_sums(ray, chi, p, window).bounded()) dim = 2;
    else if (lp_sums(ray, psi, p, window).bounded()) dim = 1;
    report.ray_dimension.push_back(dim);
    report.ray_names.push_back(ray.name);
    if (dim == 1) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(r + 1);
      row(0) = -psi[1];
      row(i + 1) = psi[0];
      rows.push_back(row);
    } else if (dim == 0) {
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(r + 1), b = a;
      a(0) = 1;
      b(i + 1) = 1;
      rows.push_back(a);
      rows.push_back(b);
    }
  }
  Eigen::MatrixXd constraints(Index(rows.size()), r + 1);
  for (Index k = 0; k < Index(rows.size()); ++k) constraints.row(k) = rows[k] / rows[k].cwiseAbs().maxCoeff();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(constraints);
  lu.setThreshold(1e-9);
  const Eigen::MatrixXd kernel = lu.kernel();
  if (lu.rank() == r + 1) {
    report.found = Tristate::no;
    report.reason = "only the trivial solution has bounded partial sums";
  } else {
    report.found = Tristate::yes;
    Eigen::VectorXd data = kernel.col(0);
    data /= data.cwiseAbs().maxCoeff();
    report.root_data = data;
    report.reason = "nontrivial solution with bounded partial sums";
    PartialSums total;
    total.quarter = total.half = total.full = rs->root_measure * std::pow(std::abs(data(0)), p);
    for (Index i = 0; i < r; ++i) {
      const auto& ray = rs->rays[i];
      std::vector<double> u;
      if (report.ray_dimension[i] == 1) {
        u = minimal[i];
        for (double& v : u) v *= data(0);
      } else {
        u = forward_solution<double>(ray.weight, ray.measure, ray.killing, alpha, data(0), data(i + 1), window);
      }
      const auto s = lp_sums(ray, u, p, window);
      total.quarter += s.quarter;
      total.half += s.half;
      total.full += s.full;
    }
    report.partial_sums = {total.quarter, total.half, total.full};
    if (check_condition_A(family).verdict == Tristate::yes) report.consistent = false;
  }
  return report;
}

bool check_summability_criterion(const Graph& g, Index x) {
  if (x < 0 || x >= g.size()) throw InputError("summability: vertex out of range");
  double acc = 0;
  g.for_each_neighbor(x, [&](Index y, double w) { acc += w * w / g.measure()(y); });
  return std::isfinite(acc);
}

std::optional<bool> check_summability_criterion(const Family& family, Index x) {
  if (auto f = dynamic_cast<const FiniteFamily*>(&family)) return check_summability_criterion(f->graph(), x);
  return family.row_l2_summable(x);
}

double quadratic_form_gap(const Section& section, const Eigen::VectorXd& u) {
  const SectionOperator op(section);
  const double matrix_form = (op.measure().array() * u.array() * op.apply(u).array()).sum();
  return std::abs(matrix_form - energy(section.graph, u, section.deficiency).total());
}

}  // namespace dfg
