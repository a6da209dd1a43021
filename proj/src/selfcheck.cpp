#include "dfg/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "dfg/completeness.hpp"
#include "dfg/formal.hpp"

namespace dfg {

namespace {

double log_uniform(std::mt19937_64& rng, double spread) {
  return std::exp(std::uniform_real_distribution<double>(-spread, spread)(rng));
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

double sup(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Graph random_graph(std::mt19937_64& rng, const RandomGraphOptions& opt) {
  const Index n = std::uniform_int_distribution<Index>(opt.min_vertices, opt.max_vertices)(rng);
  std::vector<Eigen::Triplet<double, Index>> edges;
  std::vector<std::pair<Index, Index>> seen;
  auto add = [&](Index x, Index y) {
    if (x == y) return;
    auto key = std::minmax(x, y);
    for (const auto& e : seen)
      if (e == std::pair<Index, Index>(key)) return;
    seen.emplace_back(key);
    edges.emplace_back(x, y, log_uniform(rng, opt.weight_spread));
  };
  for (Index x = 1; x < n; ++x) add(x, std::uniform_int_distribution<Index>(0, x - 1)(rng));
  const long extra = std::poisson_distribution<long>(opt.extra_edges * double(n))(rng);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (long k = 0; k < extra; ++k) add(pick(rng), pick(rng));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n), m(n);
  std::bernoulli_distribution killed(opt.killing_share);
  for (Index x = 0; x < n; ++x) {
    if (killed(rng)) c(x) = log_uniform(rng, opt.weight_spread);
    m(x) = log_uniform(rng, opt.weight_spread);
  }
  return make_graph<double>(n, edges, c, m);
}

Section random_section(std::mt19937_64& rng, const RandomGraphOptions& opt) {
  Section s;
  s.level = 1;
  s.graph = random_graph(rng, opt);
  const Index n = s.graph.size();
  s.deficiency = Eigen::VectorXd::Zero(n);
  std::bernoulli_distribution edge(0.3);
  for (Index x = 0; x < n; ++x)
    if (edge(rng)) s.deficiency(x) = log_uniform(rng, opt.weight_spread);
  s.deficiency(std::uniform_int_distribution<Index>(0, n - 1)(rng)) = log_uniform(rng, opt.weight_spread);
  s.tags.resize(std::size_t(n));
  for (Index x = 0; x < n; ++x) s.tags[std::size_t(x)].base = long(x);
  return s;
}

namespace {

/// Runs `instances` draws of `check`, which returns error/tolerance (≤ 1 passes).
SuiteResult run_suite(const std::string& name, long instances, std::uint64_t seed,
                      const std::function<double(std::mt19937_64&, std::string&)>& check) {
  SuiteResult r;
  r.name = name;
  std::mt19937_64 rng(seed);
  for (long i = 0; i < instances; ++i) {
    std::string detail;
    double ratio;
    try {
      ratio = check(rng, detail);
    } catch (const std::exception& e) {
      ratio = INFINITY;
      detail = e.what();
    }
    ++r.instances;
    r.worst = std::max(r.worst, ratio);
    if (!(ratio <= 1)) {
      if (r.failures++ == 0) {
        std::ostringstream os;
        os << "instance " << i << ": error/tolerance " << ratio << (detail.empty() ? "" : " (" + detail + ")");
        r.first_failure = os.str();
      }
    }
  }
  return r;
}

}  // namespace

std::vector<SuiteResult> run_property_suites(const SelfcheckOptions& options) {
  const long N = options.instances;
  std::uint64_t seed = options.seed;
  const RandomGraphOptions small{2, 30, 1.0, 0.5, 1.0};
  std::vector<SuiteResult> out;
  auto alpha_of = [](std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.1, 3.0)(rng); };

  // (L_{K1}+α)^{-1}f ≤ (L_{K2}+α)^{-1}f and e^{−tL_{K1}}f ≤ e^{−tL_{K2}}f on K1 ⊂ K2.
  out.push_back(run_suite("domain monotonicity", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Graph g = random_graph(rng, {3, 30, 1.0, 0.5, 1.0});
    const Index n = g.size();
    const Index k2 = std::uniform_int_distribution<Index>(2, n)(rng);
    const Index k1 = std::uniform_int_distribution<Index>(1, k2 - 1)(rng);
    std::vector<Index> K1(k1), K2(k2);
    std::iota(K1.begin(), K1.end(), 0);
    std::iota(K2.begin(), K2.end(), 0);
    const auto s1 = dirichlet_subgraph(g, K1), s2 = dirichlet_subgraph(g, K2);
    const SectionOperator a1(s1.graph, Eigen::VectorXd::Zero(k1)), a2(s2.graph, Eigen::VectorXd::Zero(k2));
    const Eigen::VectorXd f = random_vector(rng, n, 0, 1);
    const double alpha = alpha_of(rng), t = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    const Eigen::VectorXd u1 = solve_resolvent(a1, alpha, f.head(k1)).solution;
    const Eigen::VectorXd u2 = solve_resolvent(a2, alpha, f.head(k2)).solution;
    const Eigen::VectorXd p1 = semigroup_apply(a1, t, Eigen::VectorXd(f.head(k1)));
    const Eigen::VectorXd p2 = semigroup_apply(a2, t, Eigen::VectorXd(f.head(k2)));
    const double tol = 1e-10 * (1 + sup(u2) + sup(p2));
    const double excess = std::max((u1 - u2.head(k1)).maxCoeff(), (p1 - p2.head(k1)).maxCoeff());
    return std::max(0.0, excess) / tol;
  }));

  // f ≥ 0 ⇒ R_α f ≥ 0, e^{−tL}f ≥ 0; f ≥ 0, f ≠ 0 on a connected section ⇒ both > 0.
  out.push_back(run_suite("positivity preserving/improving", N, ++seed, [&](std::mt19937_64& rng, std::string& d) {
    const Section s = random_section(rng, {2, 20, 1.5, 0.5, 0.7});
    const SectionOperator op(s);
    const Index n = s.size();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    f(std::uniform_int_distribution<Index>(0, n - 1)(rng)) = 1;
    const double alpha = alpha_of(rng);
    const Eigen::VectorXd u = solve_resolvent(op, alpha, f).solution;
    const Eigen::VectorXd p = semigroup_apply(op, 1.0, f);
    if (u.minCoeff() <= 0) d = "resolvent not strictly positive";
    if (p.minCoeff() <= 0) d = "semigroup not strictly positive";
    return d.empty() ? 0.0 : 2.0;
  }));

  // 0 ≤ f ≤ 1 ⇒ 0 ≤ α(L+α)^{-1}f ≤ 1.
  out.push_back(run_suite("Markov bound", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const SectionOperator op(s);
    const Eigen::VectorXd f = random_vector(rng, s.size(), 0, 1);
    const double alpha = alpha_of(rng);
    const Eigen::VectorXd v = alpha * solve_resolvent(op, alpha, f).solution;
    const double excess = std::max(-v.minCoeff(), v.maxCoeff() - 1);
    return std::max(0.0, excess) / 1e-12;
  }));

  // R_α − R_β = (β − α) R_α R_β.
  out.push_back(run_suite("resolvent identity", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const SectionOperator op(s);
    const Eigen::VectorXd f = random_vector(rng, s.size(), -1, 1);
    const double a = alpha_of(rng), b = alpha_of(rng);
    const Eigen::VectorXd ra = solve_resolvent(op, a, f).solution, rb = solve_resolvent(op, b, f).solution;
    const Eigen::VectorXd rab = solve_resolvent(op, a, rb).solution;
    const double err = sup(ra - rb - (b - a) * rab);
    return err / (1e-9 * std::max(1.0, sup(ra) + sup(rb)));
  }));

  // e^{−(s+t)L} = e^{−sL}e^{−tL}.
  out.push_back(run_suite("semigroup property", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const SectionOperator op(s);
    const Eigen::VectorXd f = random_vector(rng, s.size(), -1, 1);
    std::uniform_real_distribution<double> time(0.05, 3.0);
    const double t1 = time(rng), t2 = time(rng);
    const Eigen::VectorXd lhs = semigroup_apply(op, t1 + t2, f);
    const Eigen::VectorXd rhs = semigroup_apply(op, t1, semigroup_apply(op, t2, f));
    return sup(lhs - rhs) / (1e-9 * std::max(1.0, sup(f)));
  }));

  // Σ (L̃u) v m = ½Σ b ∇u ∇v + Σ (c + d) u v on finitely supported functions.
  out.push_back(run_suite("Green identity", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const Eigen::VectorXd u = random_vector(rng, s.size(), -1, 1), v = random_vector(rng, s.size(), -1, 1);
    const auto [lhs, rhs] = green_identity(s.graph, u, v, s.deficiency);
    // scale: the sum of absolute terms
    const auto e = energy<double>(s.graph, Eigen::VectorXd(u.cwiseAbs() + v.cwiseAbs()), s.deficiency);
    return std::abs(lhs - rhs) / (1e-10 * std::max(1.0, e.total()));
  }));

  // Q(C∘u) ≤ Q(u) for the normal contractions clamp to [0,1] and |·|.
  out.push_back(run_suite("normal contraction", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const Eigen::VectorXd u = random_vector(rng, s.size(), -2, 2);
    const double q = energy(s.graph, u, s.deficiency).total();
    const double q1 = energy<double>(s.graph, Eigen::VectorXd(u.cwiseMax(0.0).cwiseMin(1.0)), s.deficiency).total();
    const double q2 = energy<double>(s.graph, Eigen::VectorXd(u.cwiseAbs()), s.deficiency).total();
    return std::max(0.0, std::max(q1, q2) - q) / (1e-12 * std::max(1.0, q));
  }));

  // M_t = e^{−tL}1 + ∫_0^t e^{−sL}(c/m)ds is non-increasing in t with values in [0,1].
  out.push_back(run_suite("M_t monotone", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const SectionOperator op(s);
    const Eigen::VectorXd rate = op.deficiency_rate();
    double prev_max = 0, worst = 0;
    Eigen::VectorXd prev = Eigen::VectorXd::Ones(s.size());
    for (double t : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
      const Eigen::VectorXd M = Eigen::VectorXd::Ones(s.size()) - semigroup_integral(op, t, rate);
      worst = std::max({worst, (M - prev).maxCoeff(), -M.minCoeff(), M.maxCoeff() - 1});
      prev = M;
      prev_max = std::max(prev_max, sup(M));
    }
    return std::max(0.0, worst) / 1e-10;
  }));

  // M_t = S + e^{−tL}(1 − S) with S = L^{-1}(c/m).
  out.push_back(run_suite("M = S + e^{-tL}(1-S)", N, ++seed, [&](std::mt19937_64& rng, std::string&) {
    const Section s = random_section(rng, small);
    const SectionOperator op(s);
    const double t = std::uniform_real_distribution<double>(0.05, 4.0)(rng);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.size());
    const Eigen::VectorXd M = ones - semigroup_integral(op, t, op.deficiency_rate());
    const Eigen::VectorXd direct = semigroup_apply(op, t, ones) + semigroup_integral(op, t, op.killing_rate());
    const Eigen::VectorXd S = section_S(s);
    const Eigen::VectorXd identity = S + semigroup_apply(op, t, Eigen::VectorXd(ones - S));
    return std::max(sup(M - identity), sup(direct - identity)) / 1e-9;
  }));

  // Central-difference residual of the heat equation shrinks by ≈4 when Δt halves.
  out.push_back(run_suite("heat residual O(dt^2)", N, ++seed, [&](std::mt19937_64& rng, std::string& d) {
    const Section s = random_section(rng, small);
    const SectionOperator op(s);
    const Eigen::VectorXd f = random_vector(rng, s.size(), 0, 1);
    const double dt = 0.1 / op.norm_inf();
    auto run = [&](double h, int steps) {
      Eigen::MatrixXd samples(s.size(), steps + 1);
      samples.col(0) = f;
      const Eigen::MatrixXd step = semigroup_apply(op, h, Eigen::MatrixXd(Eigen::MatrixXd::Identity(s.size(), s.size())));
      for (int k = 1; k <= steps; ++k) samples.col(k) = step * samples.col(k - 1);
      return heat_residual(op, h, samples).max_residual;
    };
    const double coarse = run(dt, 8), fine = run(dt / 2, 16);
    const double ratio = coarse / fine;
    std::ostringstream os;
    os << "ratio " << ratio;
    d = os.str();
    // 4 up to higher-order terms; outside [3, 5] counts as a failure
    return (ratio >= 3 && ratio <= 5) ? std::abs(ratio - 4) : 2.0;
  }));
  return out;
}

}  // namespace dfg
