#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dfg/completeness.hpp"
#include "dfg/scenarios.hpp"
#include "dfg/selfcheck.hpp"
#include "oracles.hpp"

using namespace dfg;
using oracle::Big;

TEST_CASE("w_n(0) on the cube half-line against the frozen table") {
  const auto fast = make_builtin("fastline");
  const std::vector<Index> probes{0};
  Schedule sch;
  sch.levels.assign(std::begin(oracle::kFrozenLevels), std::end(oracle::kFrozenLevels));
  for (int a = 0; a < 3; ++a) {
    const double alpha = oracle::kFrozenAlphas[a];
    CAPTURE(alpha);
    const auto w = compute_w(*fast, alpha, probes, sch);
    for (int l = 0; l < 10; ++l) CHECK(w.limit.values(l, 0) == doctest::Approx(oracle::kFrozenW[a][l]).epsilon(1e-12));
  }
}

TEST_CASE("w_n on a whole section against the 50-digit Thomas solve") {
  const auto fast = make_builtin("fastline");
  for (int n : {5, 40, 300}) {
    for (double alpha : {0.3, 1.0, 4.0}) {
      const SectionOperator op(fast->section(n));
      const Eigen::VectorXd w = section_w(op, alpha);
      const auto ref = oracle::halfline_w(oracle::cube_weight, n, Big(alpha));
      for (int k = 0; k <= n; ++k) CHECK(w(k) == doctest::Approx(double(ref[k])).epsilon(1e-12));
    }
  }
}

TEST_CASE("w_n is [0,1]-valued and decreasing in n on random sections") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 30; ++i) {
    const Section s = random_section(rng);
    const SectionOperator op(s);
    const Eigen::VectorXd w = section_w(op, 1.0);
    CHECK(w.minCoeff() >= 0);
    CHECK(w.maxCoeff() <= 1);
  }
}

TEST_CASE("finite graphs have w = 0") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 10; ++i) {
    const FiniteFamily fam(random_graph(rng));
    const std::vector<Index> probes{0};
    for (double alpha : {0.5, 1.0, 2.0}) CHECK(compute_w(fam, alpha, probes, Schedule::doubling(1, 4)).limit.values.maxCoeff() == 0.0);
    const auto rep = classify(fam, probes, Schedule::doubling(1, 4));
    CHECK(rep.classification == Classification::sc_suggested);
  }
}

TEST_CASE("integer line: w_n(0) decays below 1e-6 by level 200") {
  const auto z = make_builtin("zline");
  const std::vector<Index> probes{0};
  Schedule sch;
  sch.levels = {25, 50, 100, 200};
  for (double alpha : {0.5, 1.0, 2.0}) CHECK(compute_w(*z, alpha, probes, sch).limit.final_values()(0) < 1e-6);
}

TEST_CASE("heat loss curve: frozen values, monotone in t and n, balanced") {
  const auto fast = make_builtin("fastline");
  const std::vector<double> times{0.5, 1.0};
  const std::vector<Index> probes{0, 1};
  Schedule sch;
  sch.levels = {4, 8, 16};
  const auto h = compute_M(*fast, times, probes, sch);
  for (const auto& row : oracle::kFrozenLoss) {
    const auto level = std::size_t(std::find(sch.levels.begin(), sch.levels.end(), row.level) - sch.levels.begin());
    const auto t = std::size_t(row.t == 0.5 ? 0 : 1);
    CHECK(h.lost[level][t](0) == doctest::Approx(row.lost).epsilon(1e-10));
  }
  CHECK(h.worst_time_monotonicity <= 1e-12);
  CHECK(h.worst_level_monotonicity <= 1e-12);
  CHECK(h.max_balance_error < 1e-10);
}

TEST_CASE("killed mass: M_t = S + e^{-tL}(1 - S) on random sections") {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const Section s = random_section(rng);
    const SectionOperator op(s);
    const Eigen::MatrixXd a = oracle::dense_generator(Eigen::MatrixXd(s.graph.weights()), s.graph.killing(),
                                                      s.deficiency, s.graph.measure());
    const Eigen::VectorXd S = section_S(s);
    const Eigen::VectorXd kill = s.graph.killing().cwiseQuotient(s.graph.measure());
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(s.size());
    // S solves A S = c/m, so it is the potential of the killing rate
    CHECK((a * S - kill).cwiseAbs().maxCoeff() < 1e-9 * (1 + kill.cwiseAbs().maxCoeff()));
    for (double t : {0.3, 2.0}) {
      const Eigen::VectorXd M = oracle::heat(a, t, one) + oracle::heat_integral(a, t, kill);
      const Eigen::VectorXd rhs = S + oracle::heat(a, t, one - S);
      CHECK((M - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("Laplace transform of the heat loss reproduces w on a section") {
  const Section s = make_builtin("fastline")->section(32);
  const SectionOperator op(s);
  const std::vector<Index> probes{0, 3, 10};
  for (double alpha : {0.5, 2.0}) {
    const Eigen::VectorXd w = section_w(op, alpha);
    const Eigen::VectorXd lap = laplace_of_heat_loss(op, alpha, probes);
    for (std::size_t i = 0; i < probes.size(); ++i) CHECK(lap(Index(i)) == doctest::Approx(w(probes[i])).epsilon(1e-9));
  }
}

TEST_CASE("classification: cube half-line SI with a certificate below w_n") {
  const auto fast = make_builtin("fastline");
  const auto probes = fast->default_probes();
  const auto rep = classify(*fast, probes, Schedule::doubling(8, 512));
  CHECK(rep.classification == Classification::si_certified);
  CHECK(rep.certificates_consistent);
  for (std::size_t a = 0; a < rep.alphas.size(); ++a) {
    REQUIRE(rep.certificates[a].has_value());
    const auto& c = *rep.certificates[a];
    CHECK(c.residual < 1e-12);
    for (std::size_t i = 0; i < c.probes.size(); ++i) {
      CHECK(c.probe_values[i] > 0);
      CHECK(c.probe_values[i] <= rep.w[a].limit.final_values()(Index(i)) + 1e-12);
    }
  }
}

TEST_CASE("certificate of the cube half-line solves the ray equation") {
  const auto fast = make_builtin("fastline");
  const std::vector<Index> probes{0, 1};
  const auto found = subsolution_search(*fast, 1.0, 64, probes);
  REQUIRE(found.certificate);
  const auto& c = *found.certificate;
  // (L̃+α)l at depth k of the single ray, with l(0) the root value
  auto l = [&](long k) { return c.value(Index(k)); };
  for (long k = 1; k < 60; ++k) {
    const double bl = std::pow(double(k), 3), br = std::pow(double(k + 1), 3);
    const double res = bl * (l(k) - l(k - 1)) + br * (l(k) - l(k + 1)) + l(k);
    CHECK(res <= 1e-9 * br);
  }
  CHECK(c.value(0) <= 1);
  CHECK(std::isnan(c.value(100000)));
}

TEST_CASE("classification: integer line SC, no certificate") {
  const auto z = make_builtin("zline");
  const auto probes = z->default_probes();
  const auto rep = classify(*z, probes, Schedule::doubling(8, 256));
  CHECK(rep.classification == Classification::sc_suggested);
  for (const auto& c : rep.certificates) CHECK_FALSE(c.has_value());
  CHECK_FALSE(subsolution_search(*z, 1.0, 64, probes).certificate.has_value());
}

TEST_CASE("equivalence tables agree internally on both line families") {
  const std::vector<double> times{0.25, 0.5, 1, 2, 4};
  for (const char* name : {"fastline", "zline"}) {
    CAPTURE(name);
    const auto f = make_builtin(name);
    const auto probes = f->default_probes();
    for (double alpha : {0.5, 1.0, 2.0}) {
      const auto t = verify_equivalences(*f, alpha, times, probes, Schedule::doubling(8, 512));
      CHECK(t.consistent);
      CHECK(t.laplace_gap < 1e-3);
      CHECK(t.rows.size() >= 5);
    }
  }
}

TEST_CASE("Jacobi counterexample: eigenfunction identity in 100 digits") {
  using Wide = boost::multiprecision::cpp_bin_float_100;
  const Wide lambda(1), q(0.5);
  const Wide alpha = jacobi_alpha(lambda);
  CHECK(double(alpha) == doctest::Approx(std::exp(1.0) + std::exp(-1.0) - 2).epsilon(1e-15));
  Wide worst(0), l2(0);
  for (long x = -50; x <= 50; ++x) {
    const Wide u = jacobi_eigenfunction(lambda, x);
    const Wide m = jacobi_measure(lambda, q, x), c = jacobi_killing(lambda, q, x);
    const Wide lu = (Wide(2) * u - jacobi_eigenfunction(lambda, x + 1) - jacobi_eigenfunction(lambda, x - 1) + c * u) / m;
    const Wide r = abs(lu + alpha * u);
    if (r > worst) worst = r;
    l2 += m * u * u;
  }
  CHECK(double(worst) < 1e-10);
  // Σ m u² ≤ Σ q^{|x|} = (1+q)/(1−q) = 3
  CHECK(double(l2) <= 3.0);
}

TEST_CASE("supergraph of the cube half-line classifies SC") {
  const auto rep = supergraph_scenario(make_builtin("fastline"), Schedule::doubling(8, 128), {});
  CHECK(rep.base_report.classification == Classification::si_certified);
  CHECK(rep.super_report.classification == Classification::sc_suggested);
  for (std::size_t a = 0; a < rep.decreasing.size(); ++a) {
    CHECK(rep.decreasing[a]);
    CHECK(rep.super_report.w[a].limit.final_values()(0) < 1e-2);
  }
  for (const auto& r : rep.rays) CHECK(r.growth_after_crossing);
}

TEST_CASE("extension scenario on the cube half-line") {
  ExtensionOptions ext;
  ext.window = 16;
  const auto rep = extension_scenario(make_builtin("fastline"), ext, Schedule::doubling(8, 128), {});
  REQUIRE_FALSE(rep.skipped);
  CHECK(rep.subgraph_report.classification == Classification::si_certified);
  CHECK(rep.V_report.classification == Classification::si_certified);
  for (const auto& check : rep.checks)
    for (const auto& c : check.cases) {
      CAPTURE(c.name);
      CHECK(c.count > 0);
      CHECK(c.violations == 0);
      CHECK(c.max_value <= 1e-8);
    }
  // on an SC base the scenario has nothing to extend
  CHECK(extension_scenario(make_builtin("zline"), ext, Schedule::doubling(8, 64), {}).skipped);
}
