#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <Eigen/SparseCholesky>

#include "dfg/family.hpp"

namespace dfg {

/// A = D_m^{-1}(Lap_b + diag(c + d)) on a finite section: off-diagonal
/// −b(x,y)/m(x), diagonal (Σ_{y∈V} b(x,y) + c(x))/m(x) with the out-of-section
/// part of the row sum supplied as the deficiency d.
template <typename Scalar>
SpMat<Scalar> assemble_matrix(const WeightedGraph<Scalar>& g, const Vec<Scalar>& deficiency) {
  const Index n = g.size();
  if (deficiency.size() != n) throw InputError("assemble: deficiency size mismatch");
  std::vector<Eigen::Triplet<Scalar, Index>> trip;
  trip.reserve(g.weights().nonZeros() + n);
  for (Index x = 0; x < n; ++x) {
    const Scalar inv_m = Scalar(1) / g.measure()(x);
    g.for_each_neighbor(x, [&](Index y, const Scalar& w) { trip.emplace_back(x, y, -w * inv_m); });
    trip.emplace_back(x, x, (g.row_sums()(x) + g.killing()(x) + deficiency(x)) * inv_m);
  }
  SpMat<Scalar> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

struct SolveResult {
  Eigen::VectorXd solution;
  /// ‖(A+α)u − f‖_∞ / (‖A+α‖_∞‖u‖_∞ + ‖f‖_∞)
  double residual = 0;
  /// ‖(A+α)u − f‖_∞
  double absolute_residual = 0;
  int refinements = 0;
};

class SectionOperator {
 public:
  using Sparse = SpMat<double>;

  explicit SectionOperator(const Section& s) : SectionOperator(s.graph, s.deficiency) {}
  SectionOperator(const Graph& g, const Eigen::VectorXd& deficiency);

  Index size() const { return a_.rows(); }
  const Sparse& matrix() const { return a_; }
  /// D^{1/2} A D^{-1/2}: symmetric, entries −b/√(m m'), same diagonal.
  const Sparse& symmetric() const { return s_; }
  const Eigen::VectorXd& measure() const { return m_; }
  const Eigen::VectorXd& sqrt_measure() const { return sqrt_m_; }
  /// (c + d)/m: what A sends the constant 1 to.
  const Eigen::VectorXd& loss_rate() const { return loss_; }
  const Eigen::VectorXd& killing_rate() const { return kill_; }
  const Eigen::VectorXd& deficiency_rate() const { return defect_; }
  double norm_inf() const { return norm_inf_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return a_ * v; }

  using Factor = Eigen::SimplicialLDLT<Sparse, Eigen::Lower, Eigen::AMDOrdering<Index>>;
  /// LDLT of S + αI, computed once per α and shared between threads.
  std::shared_ptr<const Factor> factor(double alpha) const;

 private:
  Sparse a_, s_;
  Eigen::VectorXd m_, sqrt_m_, loss_, kill_, defect_;
  double norm_inf_ = 0;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const Factor>> cache_;
};

SectionOperator assemble(const Section& s);

/// (A + αI)^{-1} f. Throws SolverError when the scaled residual exceeds tol
/// after iterative refinement, or when f ≥ 0 yields a solution with a
/// negative entry beyond rounding.
SolveResult solve_resolvent(const SectionOperator& op, double alpha, const Eigen::VectorXd& f, double tol = 1e-12);

/// e^{−tA} applied to each column of V.
Eigen::MatrixXd semigroup_apply(const SectionOperator& op, double t, const Eigen::MatrixXd& V, double tol = 1e-12);
inline Eigen::VectorXd semigroup_apply(const SectionOperator& op, double t, const Eigen::VectorXd& v,
                                       double tol = 1e-12) {
  return semigroup_apply(op, t, Eigen::MatrixXd(v), tol).col(0);
}
/// ∫_0^t e^{−sA} g ds for each column of G.
Eigen::MatrixXd semigroup_integral(const SectionOperator& op, double t, const Eigen::MatrixXd& G, double tol = 1e-12);
inline Eigen::VectorXd semigroup_integral(const SectionOperator& op, double t, const Eigen::VectorXd& g,
                                          double tol = 1e-12) {
  return semigroup_integral(op, t, Eigen::MatrixXd(g), tol).col(0);
}

/// Quadrature nodes used by the semigroup routines for a given tolerance.
int contour_nodes(double tol);

struct HeatResidual {
  double max_residual = 0;
  double expected = 0;  // Δt²/6 · max|d³N/dt³| estimated from the samples
  Index argmax_vertex = -1;
  Index argmax_step = -1;
};

/// Central-difference residual of dN/dt + AN − g on a uniform grid; column k of
/// `samples` is N at time k·dt.
HeatResidual heat_residual(const SectionOperator& op, double dt, const Eigen::MatrixXd& samples,
                           const Eigen::VectorXd& forcing = Eigen::VectorXd());

/// Matrix Market coordinate file of A with a comment line carrying `note`.
void export_matrix_market(const SectionOperator& op, const std::string& path, const std::string& note = "");

}  // namespace dfg
