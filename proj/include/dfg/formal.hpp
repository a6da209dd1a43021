#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dfg/family.hpp"

namespace dfg {

namespace detail {
template <typename Scalar>
bool unavailable(const Scalar& v) {
  using std::isnan;
  return isnan(v);
}
template <typename Scalar>
std::vector<Index> all_or(std::span<const Index> at, Index n) {
  std::vector<Index> out(at.begin(), at.end());
  if (at.empty()) {
    out.resize(n);
    for (Index i = 0; i < n; ++i) out[i] = i;
  }
  return out;
}
}  // namespace detail

/// (1/m(x)) [Σ_y b(x,y)(u(x) − u(y)) + (c(x) + d(x)) u(x)] at each x in `at`
/// (all vertices when empty). Neighbours outside the stored graph are
/// represented by the deficiency d and carry the value 0. NaN marks a value
/// that is not available; using one is an error.
template <typename Scalar>
Vec<Scalar> apply_formal(const WeightedGraph<Scalar>& g, const Vec<Scalar>& u, const Vec<Scalar>& deficiency,
                         std::span<const Index> at = {}) {
  if (u.size() != g.size()) throw InputError("apply_formal: function size mismatch");
  const bool has_d = deficiency.size() > 0;
  if (has_d && deficiency.size() != g.size()) throw InputError("apply_formal: deficiency size mismatch");
  const auto points = detail::all_or<Scalar>(at, g.size());
  Vec<Scalar> out(Index(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Index x = points[i];
    if (x < 0 || x >= g.size()) throw InputError("apply_formal: vertex out of range");
    if (detail::unavailable(u(x))) throw InputError("apply_formal: value unavailable at " + g.name(x));
    Scalar acc = (g.killing()(x) + (has_d ? deficiency(x) : Scalar(0))) * u(x);
    g.for_each_neighbor(x, [&](Index y, const Scalar& w) {
      if (detail::unavailable(u(y)))
        throw InputError("apply_formal: neighbour value unavailable at " + g.name(y));
      acc += w * (u(x) - u(y));
    });
    out(Index(i)) = acc / g.measure()(x);
  }
  return out;
}

template <typename Scalar>
Vec<Scalar> apply_formal(const WeightedGraph<Scalar>& g, const Vec<Scalar>& u, std::span<const Index> at = {}) {
  return apply_formal(g, u, Vec<Scalar>(), at);
}

template <typename Scalar>
struct ResidualReport {
  Vec<Scalar> values;     // (L̃+α)u − f at the evaluated vertices
  Scalar max_abs{0};
  Index argmax = -1;      // vertex id; lowest id wins ties
};

template <typename Scalar>
ResidualReport<Scalar> residual(const WeightedGraph<Scalar>& g, const Vec<Scalar>& u, const Scalar& alpha,
                                const Vec<Scalar>& f, const Vec<Scalar>& deficiency = Vec<Scalar>(),
                                std::span<const Index> at = {}) {
  using std::abs;
  const auto points = detail::all_or<Scalar>(at, g.size());
  if (f.size() != g.size()) throw InputError("residual: right-hand side size mismatch");
  ResidualReport<Scalar> r;
  r.values = apply_formal(g, u, deficiency, points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    r.values(Index(i)) += alpha * u(points[i]) - f(points[i]);
    const Scalar a = abs(r.values(Index(i)));
    if (r.argmax < 0 || a > r.max_abs || (a == r.max_abs && points[i] < r.argmax)) {
      r.max_abs = a;
      r.argmax = points[i];
    }
  }
  return r;
}

template <typename Scalar>
struct EnergyValue {
  Scalar dirichlet{0};  // ½ Σ b(x,y)(u(x)−u(y))²
  Scalar killing{0};    // Σ (c + d) u²
  Scalar total() const { return dirichlet + killing; }
};

template <typename Scalar>
EnergyValue<Scalar> energy(const WeightedGraph<Scalar>& g, const Vec<Scalar>& u,
                           const Vec<Scalar>& deficiency = Vec<Scalar>()) {
  if (u.size() != g.size()) throw InputError("energy: function size mismatch");
  EnergyValue<Scalar> e;
  for (Index x = 0; x < g.size(); ++x) {
    g.for_each_neighbor(x, [&](Index y, const Scalar& w) {
      if (y > x) e.dirichlet += w * (u(x) - u(y)) * (u(x) - u(y));
    });
    const Scalar k = g.killing()(x) + (deficiency.size() ? deficiency(x) : Scalar(0));
    e.killing += k * u(x) * u(x);
  }
  return e;
}

/// Both sides of Σ_x (L̃u)(x) v(x) m(x) = ½Σ b (u(x)−u(y))(v(x)−v(y)) + Σ (c+d) u v.
template <typename Scalar>
std::pair<Scalar, Scalar> green_identity(const WeightedGraph<Scalar>& g, const Vec<Scalar>& u, const Vec<Scalar>& v,
                                         const Vec<Scalar>& deficiency = Vec<Scalar>()) {
  const Vec<Scalar> lu = apply_formal(g, u, deficiency);
  Scalar lhs{0}, rhs{0};
  for (Index x = 0; x < g.size(); ++x) {
    lhs += lu(x) * v(x) * g.measure()(x);
    g.for_each_neighbor(x, [&](Index y, const Scalar& w) {
      if (y > x) rhs += w * (u(x) - u(y)) * (v(x) - v(y));
    });
    rhs += (g.killing()(x) + (deficiency.size() ? deficiency(x) : Scalar(0))) * u(x) * v(x);
  }
  return {lhs, rhs};
}

enum class MinPrinciple { pass, pass_identically_zero, hypotheses_not_met, fail };

struct MinPrincipleReport {
  MinPrinciple verdict = MinPrinciple::pass;
  Index witness = -1;
  std::string message;
};

/// Checks: (L̃+α)u ≥ 0 on U and u ≥ 0 off U (hypotheses), then u ≥ 0 and, per
/// connected component of U, u ≡ 0 or u > 0.
MinPrincipleReport check_min_principle(const Section& section, const Eigen::VectorXd& u, double alpha,
                                       std::span<const Index> U, double tol = 1e-10);

enum class Tristate { yes, no, unknown };
std::string to_string(Tristate t);

struct ConditionAReport {
  Tristate verdict = Tristate::unknown;
  std::string reason;
  std::string ray;                    // certificate ray for "no"
  std::vector<std::pair<long, double>> partial_sums;  // (depth, Σ_{k≤depth} m)
};

ConditionAReport check_condition_A(const Family& family);

struct LpReport {
  Tristate found = Tristate::unknown;  // yes: a nontrivial ℓ^p(m) solution exists on the window
  std::string reason;
  std::vector<int> ray_dimension;      // bounded solutions per ray (0, 1, 2)
  std::vector<std::string> ray_names;
  Eigen::VectorXd root_data;           // (u(root), u_1(1), u_2(1), ...) of the solution found
  std::vector<double> partial_sums;    // Σ m|u|^p over depths ≤ window/4, window/2, window
  bool consistent = true;              // false if condition (A) holds yet a solution was found
};

/// Solutions of (L̃+α)u = 0 on a ray-structured family, tested for bounded
/// ℓ^p(m) partial sums over doubling windows (relative growth < 1e−6).
LpReport check_lp_uniqueness(const Family& family, double alpha, double p, long window = 64);

/// Σ_y b(x,y)²/m(y) < ∞ ; exact on finite graphs.
bool check_summability_criterion(const Graph& g, Index x);
std::optional<bool> check_summability_criterion(const Family& family, Index x);

/// |Σ m u (Au) − Q(u)| for the section's form (b_K, c_K + d_K).
double quadratic_form_gap(const Section& section, const Eigen::VectorXd& u);

}  // namespace dfg
