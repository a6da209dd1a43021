#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dfg/errors.hpp"

namespace dfg {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using SpMat = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Index>;

/// Weighted graph (b, c) over a finite vertex set with measure m.
///
/// Edge weights are stored in both directions. Construction does not enforce
/// the axioms so that malformed input can be diagnosed by validate().
template <typename Scalar>
class WeightedGraph {
 public:
  using Vector = Vec<Scalar>;
  using Sparse = SpMat<Scalar>;

  WeightedGraph() = default;
  WeightedGraph(Sparse b, Vector c, Vector m, std::vector<std::string> names = {})
      : b_(std::move(b)), c_(std::move(c)), m_(std::move(m)), names_(std::move(names)) {
    if (b_.rows() != b_.cols() || b_.rows() != c_.size() || c_.size() != m_.size())
      throw InputError("graph: inconsistent dimensions");
    if (!names_.empty() && Index(names_.size()) != m_.size())
      throw InputError("graph: name list does not match vertex count");
    b_.makeCompressed();
    row_sums_ = Vector::Zero(size());
    for (Index k = 0; k < b_.outerSize(); ++k)
      for (typename Sparse::InnerIterator it(b_, k); it; ++it) row_sums_(it.row()) += it.value();
  }

  Index size() const { return m_.size(); }
  const Sparse& weights() const { return b_; }
  const Vector& killing() const { return c_; }
  const Vector& measure() const { return m_; }
  /// Σ_y b(x,y) over the stored vertices.
  const Vector& row_sums() const { return row_sums_; }
  Scalar weight(Index x, Index y) const { return b_.coeff(x, y); }

  const std::vector<std::string>& names() const { return names_; }
  std::string name(Index x) const { return names_.empty() ? std::to_string(x) : names_[x]; }

  template <typename F>
  void for_each_neighbor(Index x, F&& f) const {
    // Column x equals row x for symmetric weights.
    for (typename Sparse::InnerIterator it(b_, x); it; ++it)
      if (it.row() != x && it.value() != Scalar(0)) f(it.row(), it.value());
  }

  template <typename Other>
  WeightedGraph<Other> cast() const {
    return WeightedGraph<Other>(b_.template cast<Other>(), c_.template cast<Other>(),
                                m_.template cast<Other>(), names_);
  }

 private:
  Sparse b_;
  Vector c_;
  Vector m_;
  Vector row_sums_;
  std::vector<std::string> names_;
};

/// Builds a graph from undirected edges; each (x, y, w) sets b(x,y) = b(y,x) = w.
template <typename Scalar>
WeightedGraph<Scalar> make_graph(Index n, const std::vector<Eigen::Triplet<Scalar, Index>>& edges,
                                 Vec<Scalar> c, Vec<Scalar> m,
                                 std::vector<std::string> names = {}) {
  std::vector<Eigen::Triplet<Scalar, Index>> both;
  both.reserve(2 * edges.size());
  for (const auto& e : edges) {
    if (e.row() < 0 || e.col() < 0 || e.row() >= n || e.col() >= n)
      throw InputError("graph: edge endpoint out of range");
    both.emplace_back(e.row(), e.col(), e.value());
    if (e.row() != e.col()) both.emplace_back(e.col(), e.row(), e.value());
  }
  SpMat<Scalar> b(n, n);
  b.setFromTriplets(both.begin(), both.end());
  return WeightedGraph<Scalar>(std::move(b), std::move(c), std::move(m), std::move(names));
}

enum class Axiom { symmetry, diagonal, negative_weight, negative_killing, measure, non_finite };

struct Violation {
  Axiom axiom;
  Index x = -1;
  Index y = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

template <typename Scalar>
ValidationReport validate(const WeightedGraph<Scalar>& g) {
  using std::isfinite;
  ValidationReport report;
  auto add = [&](Axiom a, Index x, Index y, std::string msg) {
    report.violations.push_back({a, x, y, std::move(msg)});
  };
  const auto& b = g.weights();
  for (Index k = 0; k < b.outerSize(); ++k) {
    for (typename SpMat<Scalar>::InnerIterator it(b, k); it; ++it) {
      const Index x = it.row(), y = it.col();
      const Scalar v = it.value();
      if (!isfinite(v)) {
        add(Axiom::non_finite, x, y, "non-finite edge weight at (" + g.name(x) + "," + g.name(y) + ")");
        continue;
      }
      if (x == y && v != Scalar(0))
        add(Axiom::diagonal, x, x, "(b0) nonzero diagonal weight at " + g.name(x));
      if (v < Scalar(0))
        add(Axiom::negative_weight, x, y, "negative edge weight at (" + g.name(x) + "," + g.name(y) + ")");
      if (x < y && b.coeff(y, x) != v)
        add(Axiom::symmetry, x, y, "(b1) asymmetry at (" + g.name(x) + "," + g.name(y) + ")");
      if (x > y && b.coeff(y, x) == Scalar(0) && v != Scalar(0))
        add(Axiom::symmetry, y, x, "(b1) asymmetry at (" + g.name(y) + "," + g.name(x) + ")");
    }
  }
  for (Index x = 0; x < g.size(); ++x) {
    const Scalar c = g.killing()(x), m = g.measure()(x);
    if (!isfinite(c) || !isfinite(m))
      add(Axiom::non_finite, x, -1, "non-finite killing or measure at " + g.name(x));
    if (c < Scalar(0)) add(Axiom::negative_killing, x, -1, "negative killing at " + g.name(x));
    if (!(m > Scalar(0))) add(Axiom::measure, x, -1, "measure not of full support at " + g.name(x));
  }
  return report;
}

/// Blocks ordered by their smallest vertex; vertices ascending inside each block.
template <typename Scalar>
std::vector<std::vector<Index>> connected_components(const WeightedGraph<Scalar>& g) {
  const Index n = g.size();
  std::vector<Index> parent(n);
  std::iota(parent.begin(), parent.end(), Index(0));
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Index x = 0; x < n; ++x)
    g.for_each_neighbor(x, [&](Index y, Scalar w) {
      if (w > Scalar(0)) {
        const Index a = find(x), c = find(y);
        if (a != c) parent[std::max(a, c)] = std::min(a, c);
      }
    });
  std::vector<Index> block_of(n, -1);
  std::vector<std::vector<Index>> blocks;
  for (Index x = 0; x < n; ++x) {
    const Index r = find(x);
    if (block_of[r] < 0) {
      block_of[r] = Index(blocks.size());
      blocks.emplace_back();
    }
    blocks[block_of[r]].push_back(x);
  }
  return blocks;
}

namespace detail {
inline std::vector<char> membership(Index n, std::span<const Index> subset) {
  std::vector<char> in(n, 0);
  for (Index x : subset) {
    if (x < 0 || x >= n) throw InputError("vertex set is not a subset of the graph");
    in[x] = 1;
  }
  return in;
}
}  // namespace detail

/// {x ∉ W : b(x,y) > 0 for some y ∈ W}, ascending.
template <typename Scalar>
std::vector<Index> outer_boundary(const WeightedGraph<Scalar>& g, std::span<const Index> W) {
  const auto in = detail::membership(g.size(), W);
  std::vector<Index> out;
  for (Index x = 0; x < g.size(); ++x) {
    if (in[x]) continue;
    bool hit = false;
    g.for_each_neighbor(x, [&](Index y, Scalar w) { hit = hit || (in[y] && w > Scalar(0)); });
    if (hit) out.push_back(x);
  }
  return out;
}

template <typename Scalar>
struct SubgraphData {
  std::vector<Index> vertices;  // W, ascending; local index i ↔ vertices[i]
  Vec<Scalar> deficiency;       // d_W(x) = Σ_{y∉W} b(x,y)
  WeightedGraph<Scalar> graph;  // (b_W, c_W + d_W, m_W)
};

/// Restriction to W with the cut edges folded into the killing term.
template <typename Scalar>
SubgraphData<Scalar> dirichlet_subgraph(const WeightedGraph<Scalar>& g, std::span<const Index> W) {
  if (W.empty()) throw InputError("dirichlet_subgraph: empty vertex set");
  const auto in = detail::membership(g.size(), W);
  SubgraphData<Scalar> out;
  for (Index x = 0; x < g.size(); ++x)
    if (in[x]) out.vertices.push_back(x);
  const Index k = Index(out.vertices.size());
  std::vector<Index> local(g.size(), -1);
  for (Index i = 0; i < k; ++i) local[out.vertices[i]] = i;

  std::vector<Eigen::Triplet<Scalar, Index>> trip;
  out.deficiency = Vec<Scalar>::Zero(k);
  Vec<Scalar> c(k), m(k);
  std::vector<std::string> names;
  for (Index i = 0; i < k; ++i) {
    const Index x = out.vertices[i];
    g.for_each_neighbor(x, [&](Index y, Scalar w) {
      if (local[y] >= 0)
        trip.emplace_back(i, local[y], w);
      else
        out.deficiency(i) += w;
    });
    c(i) = g.killing()(x) + out.deficiency(i);
    m(i) = g.measure()(x);
    if (!g.names().empty()) names.push_back(g.names()[x]);
  }
  SpMat<Scalar> b(k, k);
  b.setFromTriplets(trip.begin(), trip.end());
  out.graph = WeightedGraph<Scalar>(std::move(b), std::move(c), std::move(m), std::move(names));
  return out;
}

}  // namespace dfg
