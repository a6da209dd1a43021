#include "dfg/section.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/SparseExtra>

#include "dfg/io.hpp"

namespace dfg {

SectionOperator::SectionOperator(const Graph& g, const Eigen::VectorXd& deficiency)
    : a_(assemble_matrix(g, deficiency)), m_(g.measure()) {
  if (!(m_.size() > 0)) throw InputError("section operator: empty section");
  if (!(m_.minCoeff() > 0)) throw InputError("section operator: measure must be positive");
  sqrt_m_ = m_.cwiseSqrt();
  kill_ = g.killing().cwiseQuotient(m_);
  defect_ = deficiency.cwiseQuotient(m_);
  loss_ = kill_ + defect_;
  s_ = a_;
  for (Index k = 0; k < s_.outerSize(); ++k)
    for (Sparse::InnerIterator it(s_, k); it; ++it) it.valueRef() *= sqrt_m_(it.row()) / sqrt_m_(it.col());
  // Exact symmetry: average against the transpose to drop rounding asymmetry.
  s_ = (0.5 * (s_ + Sparse(s_.transpose()))).pruned();
  Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(size());
  for (Index k = 0; k < a_.outerSize(); ++k)
    for (Sparse::InnerIterator it(a_, k); it; ++it) row_abs(it.row()) += std::abs(it.value());
  norm_inf_ = row_abs.maxCoeff();
}

std::shared_ptr<const SectionOperator::Factor> SectionOperator::factor(double alpha) const {
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(alpha);
    if (it != cache_.end()) return it->second;
  }
  Sparse shifted = s_;
  for (Index i = 0; i < size(); ++i) shifted.coeffRef(i, i) += alpha;
  auto f = std::make_shared<Factor>(shifted);
  if (f->info() != Eigen::Success) throw SolverError("LDLT factorization failed", std::nan(""));
  std::lock_guard lock(mutex_);
  return cache_.emplace(alpha, std::move(f)).first->second;
}

SectionOperator assemble(const Section& s) { return SectionOperator(s); }

SolveResult solve_resolvent(const SectionOperator& op, double alpha, const Eigen::VectorXd& f, double tol) {
  if (!(alpha > 0)) throw InputError("resolvent: α must be positive");
  if (f.size() != op.size()) throw InputError("resolvent: right-hand side size mismatch");
  const auto factor = op.factor(alpha);
  auto solve = [&](const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
    Eigen::VectorXd y = factor->solve(op.sqrt_measure().cwiseProduct(rhs));
    return y.cwiseQuotient(op.sqrt_measure());
  };
  SolveResult res;
  res.solution = solve(f);
  const double f_norm = f.lpNorm<Eigen::Infinity>();
  const double a_norm = op.norm_inf() + alpha;
  auto measure = [&] {
    const Eigen::VectorXd r = f - op.apply(res.solution) - alpha * res.solution;
    res.absolute_residual = r.lpNorm<Eigen::Infinity>();
    const double scale = a_norm * res.solution.lpNorm<Eigen::Infinity>() + f_norm;
    res.residual = scale > 0 ? res.absolute_residual / scale : 0.0;
    return r;
  };
  Eigen::VectorXd r = measure();
  while (res.residual > tol && res.refinements < 3) {
    res.solution += solve(r);
    ++res.refinements;
    r = measure();
  }
  if (res.residual > tol) throw SolverError("resolvent solve missed tolerance", res.residual);
  if (f.size() > 0 && f.minCoeff() >= 0) {
    const double floor = -64 * std::numeric_limits<double>::epsilon() * res.solution.lpNorm<Eigen::Infinity>();
    if (res.solution.minCoeff() < floor)
      throw SolverError("resolvent lost positivity", -res.solution.minCoeff());
    res.solution = res.solution.cwiseMax(0.0);
  }
  return res;
}

int contour_nodes(double tol) {
  const double digits = -std::log(std::max(tol, 1e-16));
  return std::clamp(int(std::ceil(digits / 2.0)) + 2, 10, 24);
}

namespace {

// Trapezoid rule on the parabola z(u) = μ(iu + 1)², u ∈ [−3, 3], for
// (1/2πi)∫ e^{zt} q(z) (zI + S)^{-1} V dz with q ≡ 1 (semigroup) or 1/z
// (integral). Conjugate symmetry halves the nodes.
Eigen::MatrixXd contour(const SectionOperator& op, double t, const Eigen::MatrixXd& V, double tol, bool integral) {
  using C = std::complex<double>;
  using CSparse = Eigen::SparseMatrix<C, Eigen::ColMajor, Index>;
  const int N = contour_nodes(tol);
  const double h = 3.0 / N;
  const double mu = std::numbers::pi * N / (12.0 * t);
  const Index n = op.size();

  const Eigen::MatrixXcd rhs = (op.sqrt_measure().asDiagonal() * V).cast<C>();
  CSparse base = op.symmetric().cast<C>();
  CSparse shift(n, n);
  shift.setIdentity();
  CSparse pattern = base + shift;
  Eigen::SparseLU<CSparse, Eigen::COLAMDOrdering<Index>> lu;
  lu.analyzePattern(pattern);

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, V.cols());
  for (int k = 0; k <= N; ++k) {
    const C iu1(1.0, k * h);
    const C z = mu * iu1 * iu1;
    const C dz = C(0, 2 * mu) * iu1;
    C weight = std::exp(z * t) * dz / C(0, 2 * std::numbers::pi);
    if (integral) weight /= z;
    CSparse m = base + z * shift;
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw SolverError("contour factorization failed", std::nan(""));
    const Eigen::MatrixXcd y = lu.solve(rhs);
    acc += (k == 0 ? 1.0 : 2.0) * (weight * y).real();
  }
  acc *= h;
  const Eigen::VectorXd inv_sqrt_m = op.sqrt_measure().cwiseInverse();
  return inv_sqrt_m.asDiagonal() * acc;
}

}  // namespace

Eigen::MatrixXd semigroup_apply(const SectionOperator& op, double t, const Eigen::MatrixXd& V, double tol) {
  if (!(t >= 0)) throw InputError("semigroup: t must be ≥ 0");
  if (V.rows() != op.size()) throw InputError("semigroup: vector size mismatch");
  if (t == 0) return V;
  return contour(op, t, V, tol, false);
}

Eigen::MatrixXd semigroup_integral(const SectionOperator& op, double t, const Eigen::MatrixXd& G, double tol) {
  if (!(t >= 0)) throw InputError("semigroup: t must be ≥ 0");
  if (G.rows() != op.size()) throw InputError("semigroup: vector size mismatch");
  if (t == 0) return Eigen::MatrixXd::Zero(G.rows(), G.cols());
  return contour(op, t, G, tol, true);
}

HeatResidual heat_residual(const SectionOperator& op, double dt, const Eigen::MatrixXd& samples,
                           const Eigen::VectorXd& forcing) {
  if (samples.cols() < 3) throw InputError("heat residual: need at least 3 time points");
  if (!(dt > 0)) throw InputError("heat residual: Δt must be positive");
  HeatResidual out;
  const Eigen::VectorXd g = forcing.size() ? forcing : Eigen::VectorXd::Zero(op.size());
  for (Index k = 1; k + 1 < samples.cols(); ++k) {
    const Eigen::VectorXd r =
        (samples.col(k + 1) - samples.col(k - 1)) / (2 * dt) + op.apply(samples.col(k)) - g;
    Index arg = 0;
    const double v = r.cwiseAbs().maxCoeff(&arg);
    if (v > out.max_residual) {
      out.max_residual = v;
      out.argmax_vertex = arg;
      out.argmax_step = k;
    }
  }
  for (Index k = 2; k + 2 < samples.cols(); ++k) {
    const Eigen::VectorXd third =
        (samples.col(k + 2) - 2 * samples.col(k + 1) + 2 * samples.col(k - 1) - samples.col(k - 2)) /
        (2 * dt * dt * dt);
    out.expected = std::max(out.expected, dt * dt / 6 * third.cwiseAbs().maxCoeff());
  }
  return out;
}

void export_matrix_market(const SectionOperator& op, const std::string& path, const std::string& note) {
  if (!Eigen::saveMarket(op.matrix(), path)) throw IoError("cannot write " + path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  // Eigen pads the banner with a double space; write the canonical form
  std::istringstream words(header);
  std::string word, banner;
  while (words >> word) banner += (banner.empty() ? "" : " ") + word;
  std::ostringstream body;
  body << in.rdbuf();
  in.close();
  write_text(path, banner + "\n" + (note.empty() ? "" : "% " + note + "\n") + body.str());
}

}  // namespace dfg
