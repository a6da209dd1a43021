#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfg/graph.hpp"

namespace dfg {

using Graph = WeightedGraph<double>;
using Json = nlohmann::json;

/// Structured identity of a family vertex. `base` is the coordinate in the base
/// template (signed position on lines); decoration vertices carry ray ≥ 0.
struct VertexTag {
  long base = 0;
  long ray = -1;
  long depth = 0;
  bool operator==(const VertexTag&) const = default;
};

/// Finite section K_n. Vertex i of `graph` is family vertex i, so ids are
/// stable across levels (K_n's ids are a prefix of K_{n+1}'s).
struct Section {
  int level = 0;
  Graph graph;
  Eigen::VectorXd deficiency;  // Σ_{y∉K_n} b(x,y)
  std::vector<VertexTag> tags;
  Index size() const { return graph.size(); }
};

/// scale·(k+1)^power, k ≥ 0.
struct PowerRule {
  double scale = 1.0;
  double power = 0.0;
  double operator()(long k) const { return scale * std::pow(double(k + 1), power); }
  Json to_json() const { return {{"scale", scale}, {"power", power}}; }
  static PowerRule from_json(const Json& j);
};

struct RayMeasure {
  std::string ray;
  bool summable = false;
  std::function<double(long)> measure;  // m at depth k ≥ 1
};

/// Declared asymptotics used by the diagnostics; nothing here is inferred.
struct TailMetadata {
  bool declared = false;
  std::optional<double> inf_measure;
  std::vector<RayMeasure> rays;
  std::optional<double> sup_rate;  // sup_x (Σ_y b(x,y) + c(x))/m(x) when finite
};

/// Rigorous bounds on a ray beyond depth N.
struct TailBound {
  double inv_weight_sum = 0;           // Σ_{k≥N} 1/b(k)
  double weighted_inv_weight_sum = 0;  // Σ_{k≥N} (k−N+1)/b(k)
  double sup_measure = 0;              // sup_{k≥N} m(k)
  double sup_killing = 0;              // sup_{k≥N} c(k)
};

/// A half-line hanging off the root: depth 0 is the root, weight(k) joins
/// depth k and k+1.
struct RayTemplate {
  std::string name;
  std::function<double(long)> weight;
  std::function<double(long)> measure;
  std::function<double(long)> killing;
  std::function<Index(long)> vertex;  // family id of depth k ≥ 1
  std::function<std::optional<TailBound>(long)> tail;  // empty: not declared
};

struct RayStructure {
  Index root = 0;
  double root_measure = 1;
  double root_killing = 0;
  std::vector<RayTemplate> rays;
};

class Family {
 public:
  virtual ~Family() = default;
  virtual std::string name() const = 0;
  /// Section K_n, n ≥ 1.
  virtual Section section(int level) const = 0;
  virtual Index section_size(int level) const { return section(level).size(); }
  virtual bool finite() const { return false; }
  virtual TailMetadata tail() const { return {}; }
  virtual std::optional<RayStructure> rays() const { return std::nullopt; }
  /// Σ_y b(x,y)²/m(y) < ∞ ; empty when the family cannot say.
  virtual std::optional<bool> row_l2_summable(Index) const { return true; }
  virtual Json to_json() const = 0;
  /// Root plus the lowest-id vertices at graph distance 1, 2 and 4.
  virtual std::vector<Index> default_probes() const;
};

using FamilyPtr = std::shared_ptr<const Family>;

Section truncate(const Family& family, int level);

/// Wraps a finite graph; every section is the whole graph.
class FiniteFamily final : public Family {
 public:
  explicit FiniteFamily(Graph g, std::string label = "finite");
  std::string name() const override { return label_; }
  Section section(int level) const override;
  Index section_size(int) const override { return graph_.size(); }
  bool finite() const override { return true; }
  TailMetadata tail() const override;
  Json to_json() const override;
  const Graph& graph() const { return graph_; }

 private:
  Graph graph_;
  std::string label_;
};

/// N or Z with b(k,k+1) = b(k), m, c given by power rules of |k|.
class LineFamily final : public Family {
 public:
  enum class Kind { half, integer };
  LineFamily(Kind kind, PowerRule weight, PowerRule measure = {}, PowerRule killing = {0.0, 0.0});
  std::string name() const override;
  Section section(int level) const override;
  Index section_size(int level) const override;
  TailMetadata tail() const override;
  std::optional<RayStructure> rays() const override;
  Json to_json() const override;

  Kind kind() const { return kind_; }
  const PowerRule& weight() const { return weight_; }
  Index id(long position) const;

 private:
  Kind kind_;
  PowerRule weight_, measure_, killing_;
};

/// Z with b ≡ 1 and measure/killing tailored so that e^{λx} is an
/// α-eigenfunction with α = e^λ + e^{−λ} − 2 (summable sequence q^{|x|}).
class JacobiFamily final : public Family {
 public:
  explicit JacobiFamily(double lambda, double ratio = 0.5);
  std::string name() const override;
  Section section(int level) const override;
  Index section_size(int level) const override { return 2 * Index(level) + 1; }
  TailMetadata tail() const override;
  std::optional<RayStructure> rays() const override;
  Json to_json() const override;

  double lambda() const { return lambda_; }
  double ratio() const { return ratio_; }
  double alpha() const;
  double measure(long x) const;
  double killing(long x) const;
  /// Σ_x q^{|x|}.
  double weight_sum() const { return (1 + ratio_) / (1 - ratio_); }

 private:
  double lambda_, ratio_;
};

// Closed forms of the Jacobi construction in any scalar type; the stable
// form c = α(1 − m) agrees with max{0, u²/w − 1}·α·m.
template <typename T>
T jacobi_alpha(const T& lambda) {
  using std::exp;
  return exp(lambda) + exp(-lambda) - T(2);
}
template <typename T>
T jacobi_eigenfunction(const T& lambda, long x) {
  using std::exp;
  return exp(lambda * T(x));
}
template <typename T>
T jacobi_measure(const T& lambda, const T& ratio, long x) {
  using std::exp;
  using std::pow;
  const T w = pow(ratio, T(std::labs(x)));
  const T u2 = exp(T(2) * lambda * T(x));
  return w < u2 ? w / u2 : T(1);
}
template <typename T>
T jacobi_killing(const T& lambda, const T& ratio, long x) {
  return jacobi_alpha(lambda) * (T(1) - jacobi_measure(lambda, ratio, x));
}

/// Rooted tree, every vertex has `branching` children; b ≡ 1, m ≡ 1.
class TreeFamily final : public Family {
 public:
  explicit TreeFamily(int branching);
  std::string name() const override { return "tree:" + std::to_string(branching_); }
  Section section(int level) const override;
  Index section_size(int level) const override;
  TailMetadata tail() const override;
  Json to_json() const override;

 private:
  int branching_;
};

/// Hub 0 joined to leaves y ≥ 1 with b(0,y) = 2^{−y}, m(y) = 4^{−y}: finite
/// row sums but Σ_y b(0,y)²/m(y) = ∞.
class GeoStarFamily final : public Family {
 public:
  std::string name() const override { return "geostar"; }
  Section section(int level) const override;
  Index section_size(int level) const override { return level + 1; }
  TailMetadata tail() const override;
  std::optional<bool> row_l2_summable(Index x) const override { return x != 0; }
  Json to_json() const override { return {{"template", "geostar"}}; }
};

/// How many decorations hang off a base vertex.
struct Multiplicity {
  enum class Rule { supergraph, unit, stride };
  Rule rule = Rule::supergraph;
  long stride = 1;  // stride rule: decorate ids ≡ stride−1 (mod stride)
  /// `row_sum` is Σ_y b(x,y) over the whole base graph.
  long count(Index base_id, double row_sum) const;
  Json to_json() const;
  static Multiplicity from_json(const Json& j);
};

/// k(x) = ⌊Σ_y b(x,y)⌋ + 1.
long supergraph_multiplicity(double row_sum);

/// Base family with paths attached at base vertices.
///  - rays: half-lines (b ≡ 1, m ≡ 1, c ≡ 0) truncated at depth `depth_scale`·n
///  - whiskers: paths of fixed length
/// Lumped mode replaces the k copies at a vertex by one path with b, m scaled
/// by k; by symmetry the base values of every k-invariant quantity coincide.
class DecoratedFamily final : public Family {
 public:
  enum class Shape { ray, whisker };
  struct Options {
    Shape shape = Shape::ray;
    long length = 1;       // whiskers; length 1 gives pendant vertices
    long depth_scale = 1;  // rays: r(n) = depth_scale·n
    bool lumped = false;
    Multiplicity multiplicity;
  };
  DecoratedFamily(FamilyPtr base, Options options);
  std::string name() const override;
  Section section(int level) const override;
  Index section_size(int level) const override;
  bool finite() const override;
  TailMetadata tail() const override;
  Json to_json() const override;
  std::vector<Index> default_probes() const override;

  const FamilyPtr& base() const { return base_; }
  const Options& options() const { return opts_; }
  long decoration_depth(int level) const;
  /// Number of decorations attached at each vertex of the base section.
  std::vector<long> multiplicities(const Section& base_section) const;
  /// Family ids of the base vertices in section(level), in base order.
  std::vector<Index> base_ids(int level) const;

 private:
  FamilyPtr base_;
  Options opts_;
};

/// Base family with extra killing equal to the total weight of its
/// decorations: the Dirichlet subgraph (b_W, c_W + d_W) of a decorated family
/// on W = base vertices.
class CutFamily final : public Family {
 public:
  explicit CutFamily(std::shared_ptr<const DecoratedFamily> decorated);
  std::string name() const override { return "cut(" + decorated_->name() + ")"; }
  Section section(int level) const override;
  Index section_size(int level) const override { return decorated_->base()->section_size(level); }
  bool finite() const override { return decorated_->base()->finite(); }
  TailMetadata tail() const override;
  std::optional<RayStructure> rays() const override;
  Json to_json() const override;
  std::vector<Index> default_probes() const override { return decorated_->base()->default_probes(); }

 private:
  std::shared_ptr<const DecoratedFamily> decorated_;
};

/// Registry names: zline, fastline, halfline[:p=..][:m=..][:c=..], jacobi[:λ],
/// tree[:branching], geostar; prefixes "supergraph:", "pendants:" decorate.
FamilyPtr make_builtin(const std::string& spec);
FamilyPtr family_from_json(const Json& j);

}  // namespace dfg
