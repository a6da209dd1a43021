#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "dfg/section.hpp"
#include "dfg/selfcheck.hpp"
#include "oracles.hpp"

using namespace dfg;

namespace {

Eigen::MatrixXd dense_of(const Section& s) {
  return oracle::dense_generator(Eigen::MatrixXd(s.graph.weights()), s.graph.killing(), s.deficiency,
                                 s.graph.measure());
}

double sup(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("assembled matrix equals the dense generator") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 30; ++i) {
    const Section s = random_section(rng);
    const SectionOperator op(s);
    const Eigen::MatrixXd a = dense_of(s);
    CHECK((Eigen::MatrixXd(op.matrix()) - a).cwiseAbs().maxCoeff() < 1e-13 * (1 + a.cwiseAbs().maxCoeff()));
    // symmetric form D^{1/2} A D^{-1/2}
    const Eigen::MatrixXd sym = op.sqrt_measure().asDiagonal() * a * op.sqrt_measure().cwiseInverse().asDiagonal();
    CHECK((Eigen::MatrixXd(op.symmetric()) - sym).cwiseAbs().maxCoeff() < 1e-12 * (1 + sym.cwiseAbs().maxCoeff()));
    CHECK((op.apply(Eigen::VectorXd::Ones(s.size())) - op.loss_rate()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("resolvent solve against a dense LU") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 30; ++i) {
    const Section s = random_section(rng);
    const SectionOperator op(s);
    const Eigen::VectorXd f = Eigen::VectorXd::Random(s.size());
    for (double alpha : {0.1, 1.0, 10.0}) {
      const auto r = solve_resolvent(op, alpha, f);
      Eigen::MatrixXd a = dense_of(s);
      a.diagonal().array() += alpha;
      const Eigen::VectorXd ref = a.partialPivLu().solve(f);
      CHECK(sup(r.solution - ref) < 1e-9 * (1 + sup(ref)));
      CHECK(r.residual < 1e-12);
    }
  }
}

TEST_CASE("resolvent of f ≥ 0 is nonnegative and α(A+α)^{-1}1 ≤ 1") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 30; ++i) {
    const Section s = random_section(rng);
    const SectionOperator op(s);
    const auto r = solve_resolvent(op, 0.7, Eigen::VectorXd::Ones(s.size()));
    CHECK(r.solution.minCoeff() > 0);
    CHECK(0.7 * r.solution.maxCoeff() <= 1 + 1e-12);
  }
}

TEST_CASE("semigroup against the dense matrix exponential") {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 20; ++i) {
    const Section s = random_section(rng);
    const SectionOperator op(s);
    const Eigen::MatrixXd a = dense_of(s);
    const Eigen::VectorXd f = Eigen::VectorXd::Random(s.size());
    for (double t : {0.0, 0.01, 0.5, 3.0}) {
      CAPTURE(t);
      const Eigen::VectorXd ref = oracle::heat(a, t, f);
      CHECK(sup(semigroup_apply(op, t, f) - ref) < 1e-10 * (1 + sup(f)));
      const Eigen::VectorXd g = op.loss_rate();
      CHECK(sup(semigroup_integral(op, t, g) - oracle::heat_integral(a, t, g)) < 1e-10);
    }
  }
}

TEST_CASE("frozen heat loss on the cube half-line") {
  const auto fast = make_builtin("fastline");
  for (const auto& row : oracle::kFrozenLoss) {
    CAPTURE(row.level);
    CAPTURE(row.t);
    const Section s = fast->section(row.level);
    const SectionOperator op(s);
    const Eigen::VectorXd lost = semigroup_integral(op, row.t, op.deficiency_rate());
    CHECK(lost(0) == doctest::Approx(row.lost).epsilon(1e-11));
    // the dense oracle reproduces the frozen value as well
    const Eigen::MatrixXd a = oracle::fastline_generator(row.level);
    const Eigen::VectorXd d = Eigen::VectorXd::Unit(row.level + 1, row.level) * std::pow(row.level + 1.0, 3);
    CHECK(oracle::heat_integral(a, row.t, d)(0) == doctest::Approx(row.lost).epsilon(1e-9));
    // no killing: survival + lost = 1
    CHECK(semigroup_apply(op, row.t, Eigen::VectorXd(Eigen::VectorXd::Ones(s.size())))(0) + lost(0) == doctest::Approx(1.0));
  }
}

TEST_CASE("semigroup of a stiff section stays accurate") {
  // deep cube half-line: ‖A‖ ~ 2·64³
  const Section s = make_builtin("fastline")->section(64);
  const SectionOperator op(s);
  const Eigen::MatrixXd a = dense_of(s);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.size());
  for (double t : {1e-4, 0.1, 2.0}) {
    const Eigen::VectorXd ref = oracle::heat(a, t, one);
    CHECK(sup(semigroup_apply(op, t, one) - ref) < 1e-10);
  }
}

TEST_CASE("heat residual is second order in the step") {
  const Section s = make_builtin("zline")->section(10);
  const SectionOperator op(s);
  const Eigen::VectorXd g = op.deficiency_rate();
  auto residual_at = [&](double dt) {
    const int steps = int(std::lround(1.0 / dt));
    Eigen::MatrixXd samples(s.size(), steps + 1);
    for (int k = 0; k <= steps; ++k) samples.col(k) = semigroup_integral(op, k * dt, g);
    return heat_residual(op, dt, samples, g).max_residual;
  };
  const double r1 = residual_at(0.05), r2 = residual_at(0.025);
  CHECK(r1 / r2 > 3.0);
  CHECK(r1 / r2 < 5.0);
}

TEST_CASE("Matrix Market export") {
  const Section s = make_builtin("zline")->section(2);
  const SectionOperator op(s);
  const auto path = std::filesystem::temp_directory_path() / "dfg_test_matrix.mtx";
  export_matrix_market(op, path.string(), "hash 0123");
  std::ifstream in(path);
  std::string header, note;
  std::getline(in, header);
  std::getline(in, note);
  CHECK(header.rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
  CHECK(note.find("hash 0123") != std::string::npos);
  Index rows = 0, cols = 0, nnz = 0;
  in >> rows >> cols >> nnz;
  CHECK(rows == 5);
  CHECK(cols == 5);
  CHECK(nnz == op.matrix().nonZeros());
  std::filesystem::remove(path);
}

TEST_CASE("input errors") {
  const Section s = make_builtin("zline")->section(2);
  const SectionOperator op(s);
  CHECK_THROWS_AS(solve_resolvent(op, -1.0, Eigen::VectorXd::Ones(5)), InputError);
  CHECK_THROWS_AS(solve_resolvent(op, 1.0, Eigen::VectorXd::Ones(4)), InputError);
  CHECK_THROWS_AS(semigroup_apply(op, -1.0, Eigen::VectorXd(Eigen::VectorXd::Ones(5))), InputError);
}
