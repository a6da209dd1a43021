#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dfg/completeness.hpp"
#include "oracles.hpp"

using namespace dfg;

TEST_CASE("doubling schedules") {
  CHECK(Schedule::doubling(8, 64).levels == std::vector<int>{8, 16, 32, 64});
  CHECK(Schedule::doubling(8, 100).levels == std::vector<int>{8, 16, 32, 64, 100});
  CHECK_THROWS_AS(Schedule::doubling(0, 8), InputError);
  Schedule bad;
  bad.levels = {8, 4};
  CHECK_THROWS_AS(bad.check(), InputError);
}

TEST_CASE("resolvent of 1 increases along the exhaustion and stays below 1/α") {
  const auto fast = make_builtin("fastline");
  const std::vector<Index> probes{0, 1, 4};
  const auto r = extended_resolvent(*fast, 1.0, constant_function(1.0), probes, Schedule::doubling(4, 256));
  CHECK(r.increasing);
  CHECK(r.worst_monotonicity == 0.0);
  for (Index i = 0; i + 1 < r.values.rows(); ++i)
    for (Index j = 0; j < r.values.cols(); ++j) CHECK(r.values(i, j) <= r.values(i + 1, j) + 1e-14);
  CHECK(r.values.maxCoeff() < 1.0);
  // α(L+α)^{-1}1 = 1 − w, so the limit inherits the oracle's
  const auto w = oracle::halfline_w(oracle::cube_weight, 256, oracle::Big(1));
  CHECK(r.final_values()(0) == doctest::Approx(1 - double(w[0])).epsilon(1e-12));
}

TEST_CASE("semigroup of 1 decreases along levels on the integer line") {
  // Dirichlet truncation: e^{−tL_n}1 increases in n toward the conservative limit 1
  const auto z = make_builtin("zline");
  const std::vector<Index> probes{0};
  const auto s = extended_semigroup(*z, 1.0, constant_function(1.0), probes, Schedule::doubling(4, 128));
  CHECK(s.increasing);
  CHECK(s.final_values()(0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("finite families are exact from the first level") {
  const auto g = make_graph<double>(2, {Eigen::Triplet<double, Index>(0, 1, 1.0)}, Eigen::Vector2d(1, 0),
                                    Eigen::Vector2d::Ones());
  const FiniteFamily fam(g);
  const std::vector<Index> probes{0, 1};
  const auto r = extended_resolvent(fam, 1.0, indicator(0), probes, Schedule::doubling(1, 8));
  CHECK(r.status[0] == LimitStatus::exact);
  // (A+1)^{-1} e_0 with A = [[2, −1], [−1, 1]]: det((A+1)) = 3·2 − 1 = 5
  CHECK(r.final_values()(0) == doctest::Approx(2.0 / 5));
  CHECK(r.final_values()(1) == doctest::Approx(1.0 / 5));
}

TEST_CASE("divergence is reported, not hidden") {
  // resolvent of a function growing like n² on an unkilled half-line
  const auto z = make_builtin("halfline:p=0");
  const std::vector<Index> probes{0};
  SectionFunction grow = [](const Section& s) {
    Eigen::VectorXd f(s.size());
    for (Index x = 0; x < s.size(); ++x) f(x) = double(x) * double(x) * double(x) * double(x);
    return f;
  };
  Schedule sch = Schedule::doubling(8, 512);
  sch.ceiling = 1e6;
  const auto r = extended_resolvent(*z, 0.01, grow, probes, sch);
  CHECK(r.status[0] == LimitStatus::diverging);
}

TEST_CASE("excessive functions") {
  const auto z = make_builtin("zline");
  const std::vector<Index> probes{0, 1};
  const std::vector<double> times{0.5, 2}, alphas{1, 3};
  const auto ok = excessive_check(*z, constant_function(1.0), probes, times, alphas, Schedule::doubling(8, 64));
  CHECK(ok.verdict == ExcessiveVerdict::pass);
  SectionFunction bump = [](const Section& s) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(s.size());
    u(0) = 1;  // L̃u < 0 next to the bump
    return u;
  };
  CHECK(excessive_check(*z, bump, probes, times, alphas, Schedule::doubling(8, 64)).verdict ==
        ExcessiveVerdict::hypotheses_not_met);
}
