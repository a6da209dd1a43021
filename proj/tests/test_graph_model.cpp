#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dfg/io.hpp"
#include "dfg/selfcheck.hpp"

using namespace dfg;
using Trip = Eigen::Triplet<double, Index>;

namespace {

Graph path3() {
  return make_graph<double>(3, {Trip(0, 1, 1.0), Trip(1, 2, 2.0)}, Eigen::Vector3d(0.5, 0, 0),
                            Eigen::Vector3d(1, 1, 2), {"a", "b", "c"});
}

bool has(const ValidationReport& r, Axiom a) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.axiom == a; });
}

}  // namespace

TEST_CASE("validate accepts a proper graph and names each broken axiom") {
  CHECK(validate(path3()).valid());

  SpMat<double> b(2, 2);
  b.insert(0, 1) = 1.0;
  b.insert(1, 0) = 2.0;
  const auto asym = validate(Graph(b, Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones()));
  REQUIRE(asym.violations.size() == 1);
  CHECK(asym.violations[0].axiom == Axiom::symmetry);

  SpMat<double> loop(2, 2);
  loop.insert(0, 0) = 1.0;
  CHECK(has(validate(Graph(loop, Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones())), Axiom::diagonal));

  const auto neg = make_graph<double>(2, {Trip(0, 1, -1.0)}, Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
  CHECK(has(validate(neg), Axiom::negative_weight));

  const auto kill = make_graph<double>(2, {Trip(0, 1, 1.0)}, Eigen::Vector2d(-1, 0), Eigen::Vector2d::Ones());
  CHECK(has(validate(kill), Axiom::negative_killing));

  const auto meas = make_graph<double>(2, {Trip(0, 1, 1.0)}, Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 0));
  CHECK(has(validate(meas), Axiom::measure));

  const auto nan = make_graph<double>(2, {Trip(0, 1, NAN)}, Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones());
  CHECK(has(validate(nan), Axiom::non_finite));
}

TEST_CASE("graph construction rejects inconsistent dimensions") {
  CHECK_THROWS_AS(Graph(SpMat<double>(2, 2), Eigen::Vector3d::Zero(), Eigen::Vector2d::Ones()), InputError);
  CHECK_THROWS_AS(make_graph<double>(2, {Trip(0, 2, 1.0)}, Eigen::Vector2d::Zero(), Eigen::Vector2d::Ones()),
                  InputError);
}

TEST_CASE("components, outer boundary and Dirichlet subgraph") {
  // 0-1-2  3-4, 3 isolated from the rest
  const auto g = make_graph<double>(5, {Trip(0, 1, 1), Trip(1, 2, 3), Trip(3, 4, 1)}, Eigen::VectorXd::Zero(5),
                                    Eigen::VectorXd::Ones(5));
  const auto blocks = connected_components(g);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0] == std::vector<Index>{0, 1, 2});
  CHECK(blocks[1] == std::vector<Index>{3, 4});

  const std::vector<Index> W{0, 1};
  CHECK(outer_boundary(g, W) == std::vector<Index>{2});

  const auto sub = dirichlet_subgraph(g, W);
  CHECK(sub.vertices == W);
  CHECK(sub.deficiency(0) == 0.0);
  CHECK(sub.deficiency(1) == 3.0);
  CHECK(sub.graph.killing()(1) == 3.0);
  CHECK(sub.graph.weight(0, 1) == 1.0);

  // W = V: nothing is cut
  const std::vector<Index> all{0, 1, 2, 3, 4};
  CHECK(dirichlet_subgraph(g, all).deficiency.isZero());
  CHECK_THROWS_AS(dirichlet_subgraph(g, std::vector<Index>{}), InputError);
  CHECK_THROWS_AS(dirichlet_subgraph(g, std::vector<Index>{7}), InputError);
}

TEST_CASE("subgraph deficiency equals the cut weight on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_graph(rng);
    std::vector<Index> W;
    std::bernoulli_distribution keep(0.5);
    for (Index x = 0; x < g.size(); ++x)
      if (keep(rng)) W.push_back(x);
    if (W.empty()) W.push_back(0);
    const auto sub = dirichlet_subgraph(g, W);
    for (std::size_t i = 0; i < W.size(); ++i) {
      const Index x = W[i];
      double cut = 0;
      g.for_each_neighbor(x, [&](Index y, double w) {
        if (!std::binary_search(W.begin(), W.end(), y)) cut += w;
      });
      CHECK(sub.deficiency(Index(i)) == doctest::Approx(cut).epsilon(1e-14));
      CHECK(sub.graph.row_sums()(Index(i)) + sub.deficiency(Index(i)) ==
            doctest::Approx(g.row_sums()(x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("sections are nested with stable ids and tracked deficiency") {
  for (const char* name : {"zline", "fastline", "tree:2", "jacobi:1", "supergraph:fastline", "pendants:zline"}) {
    CAPTURE(name);
    const auto family = make_builtin(name);
    Section prev = family->section(4);
    for (int level : {5, 8, 9}) {
      const Section s = family->section(level);
      REQUIRE(s.size() >= prev.size());
      CHECK(s.size() == family->section_size(level));
      CHECK(validate(s.graph).valid());
      for (Index x = 0; x < prev.size(); ++x) {
        CHECK(s.tags[x] == prev.tags[x]);
        CHECK(s.graph.measure()(x) == prev.graph.measure()(x));
        // total row weight (inside + deficiency) is a property of the vertex
        CHECK(s.graph.row_sums()(x) + s.deficiency(x) ==
              doctest::Approx(prev.graph.row_sums()(x) + prev.deficiency(x)).epsilon(1e-13));
        for (Index y = 0; y < prev.size(); ++y) CHECK(s.graph.weight(x, y) == prev.graph.weight(x, y));
      }
      prev = s;
    }
  }
}

TEST_CASE("the cube half-line section") {
  const auto fast = make_builtin("fastline");
  const Section s = fast->section(4);
  REQUIRE(s.size() == 5);
  for (Index k = 0; k < 4; ++k) CHECK(s.graph.weight(k, k + 1) == std::pow(double(k + 1), 3));
  CHECK(s.deficiency(4) == 125.0);
  CHECK(s.deficiency.head(4).isZero());
  CHECK(s.graph.measure().isOnes());
  CHECK(s.graph.killing().isZero());
}

TEST_CASE("supergraph multiplicity exceeds the base degree") {
  CHECK(supergraph_multiplicity(0.0) == 1);
  CHECK(supergraph_multiplicity(2.0) == 3);
  CHECK(supergraph_multiplicity(2.5) == 3);
  const auto super = std::dynamic_pointer_cast<const DecoratedFamily>(make_builtin("supergraph-explicit:fastline"));
  REQUIRE(super);
  const Section base = super->base()->section(4);
  const auto k = super->multiplicities(base);
  for (Index x = 0; x < base.size(); ++x)
    CHECK(double(k[x]) > base.graph.row_sums()(x) + base.deficiency(x));
}

TEST_CASE("lumped and explicit decorations give the same base values") {
  // k identical rays at a vertex act on base functions like one ray with
  // weights and measures multiplied by k.
  const auto lumped = std::dynamic_pointer_cast<const DecoratedFamily>(make_builtin("supergraph:halfline:p=1"));
  const auto plain = std::dynamic_pointer_cast<const DecoratedFamily>(make_builtin("supergraph-explicit:halfline:p=1"));
  REQUIRE(lumped);
  REQUIRE(plain);
  const int level = 6;
  const Section a = lumped->section(level), b = plain->section(level);
  const auto ids_a = lumped->base_ids(level), ids_b = plain->base_ids(level);
  REQUIRE(ids_a.size() == ids_b.size());
  auto resolve = [](const Section& s) {
    Eigen::MatrixXd dense = -Eigen::MatrixXd(s.graph.weights());
    dense.diagonal() = s.graph.row_sums() + s.graph.killing() + s.deficiency;
    dense = s.graph.measure().cwiseInverse().asDiagonal() * dense;
    dense.diagonal().array() += 1.0;
    return Eigen::VectorXd(dense.partialPivLu().solve(Eigen::VectorXd::Ones(s.size())));
  };
  const Eigen::VectorXd ua = resolve(a), ub = resolve(b);
  for (std::size_t i = 0; i < ids_a.size(); ++i) CHECK(ua(ids_a[i]) == doctest::Approx(ub(ids_b[i])).epsilon(1e-10));
}

TEST_CASE("Dirichlet subgraph of a decorated family is its cut family") {
  DecoratedFamily::Options o;
  o.shape = DecoratedFamily::Shape::whisker;
  o.length = 2;
  auto V = std::make_shared<const DecoratedFamily>(make_builtin("fastline"), o);
  const CutFamily W(V);
  const int level = 7;
  const Section sv = V->section(level), sw = W.section(level);
  const auto ids = V->base_ids(level);
  const auto sub = dirichlet_subgraph(sv.graph, ids);
  REQUIRE(sub.graph.size() == sw.size());
  for (Index i = 0; i < sw.size(); ++i) {
    CHECK(sub.graph.killing()(i) + sv.deficiency(ids[i]) ==
          doctest::Approx(sw.graph.killing()(i) + sw.deficiency(i)).epsilon(1e-13));
    for (Index j = 0; j < sw.size(); ++j) CHECK(sub.graph.weight(i, j) == sw.graph.weight(i, j));
  }
}

TEST_CASE("registry and JSON round trips") {
  for (const char* name : {"zline", "fastline", "halfline:p=2:mp=1", "jacobi:1", "tree:3", "geostar",
                           "supergraph:fastline"}) {
    CAPTURE(name);
    const auto f = make_builtin(name);
    const auto g = family_from_json(f->to_json());
    const Section a = f->section(6), b = g->section(6);
    REQUIRE(a.size() == b.size());
    CHECK(Eigen::MatrixXd(a.graph.weights()) == Eigen::MatrixXd(b.graph.weights()));
    CHECK(a.graph.killing() == b.graph.killing());
    CHECK(a.graph.measure() == b.graph.measure());
    CHECK(a.deficiency == b.deficiency);
  }
  CHECK_THROWS_AS(make_builtin("nosuchfamily"), InputError);
  CHECK_THROWS_AS(make_builtin("halfline:zz=1"), InputError);

  const Graph g = path3();
  const Graph back = graph_from_json(graph_to_json(g));
  CHECK(back.names() == g.names());
  CHECK(Eigen::MatrixXd(back.weights()) == Eigen::MatrixXd(g.weights()));
  CHECK(back.killing() == g.killing());
  CHECK(back.measure() == g.measure());
}

TEST_CASE("graph files: defaults and listed directions") {
  const Graph g = graph_from_json(Json::parse(R"({"vertices":["u","v"],"edges":[["u","v",2]]})"));
  CHECK(g.weight(0, 1) == 2.0);
  CHECK(g.weight(1, 0) == 2.0);
  CHECK(g.measure().isOnes());
  CHECK(g.killing().isZero());
  const Graph asym = graph_from_json(Json::parse(R"({"edges":[[0,1,1],[1,0,2]]})"));
  CHECK_FALSE(validate(asym).valid());
  CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"edges":[[0,1]]})")), InputError);
}

TEST_CASE("Jacobi measure and killing follow the closed forms") {
  const JacobiFamily j(1.0, 0.5);
  CHECK(j.alpha() == doctest::Approx(std::exp(1.0) + std::exp(-1.0) - 2).epsilon(1e-15));
  for (long x = -5; x <= 5; ++x) {
    const double w = std::pow(0.5, std::abs(x)), u2 = std::exp(2.0 * x);
    CHECK(j.measure(x) == doctest::Approx(std::min(1.0, w / u2)).epsilon(1e-14));
    CHECK(j.killing(x) == doctest::Approx(std::max(0.0, u2 / w - 1) * j.alpha() * j.measure(x)).epsilon(1e-12));
  }
}
