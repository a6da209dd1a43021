#include "dfg/family.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <regex>
#include <sstream>

#include "dfg/io.hpp"

namespace dfg {

namespace {

using Triplet = Eigen::Triplet<double, Index>;

Section make_section(int level, Index n, const std::vector<Triplet>& edges, Eigen::VectorXd c,
                     Eigen::VectorXd m, Eigen::VectorXd deficiency, std::vector<VertexTag> tags) {
  Section s;
  s.level = level;
  s.graph = make_graph<double>(n, edges, std::move(c), std::move(m));
  s.deficiency = std::move(deficiency);
  s.tags = std::move(tags);
  return s;
}

void require_level(int level) {
  if (level < 1) throw InputError("section level must be ≥ 1");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

PowerRule PowerRule::from_json(const Json& j) {
  PowerRule r;
  if (j.is_number()) {
    r.scale = j.get<double>();
    return r;
  }
  r.scale = j.value("scale", 1.0);
  r.power = j.value("power", 0.0);
  return r;
}

Section truncate(const Family& family, int level) {
  require_level(level);
  return family.section(level);
}

std::vector<Index> Family::default_probes() const {
  const Section s = section(finite() ? 1 : 4);
  const Index n = s.size();
  std::vector<Index> dist(n, -1);
  std::deque<Index> queue{0};
  dist[0] = 0;
  while (!queue.empty()) {
    const Index x = queue.front();
    queue.pop_front();
    s.graph.for_each_neighbor(x, [&](Index y, double w) {
      if (w > 0 && dist[y] < 0) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    });
  }
  std::vector<Index> probes{0};
  for (Index target : {1, 2, 4}) {
    for (Index x = 0; x < n; ++x)
      if (dist[x] == target) {
        probes.push_back(x);
        break;
      }
  }
  return probes;
}

// ---------------------------------------------------------------- finite

FiniteFamily::FiniteFamily(Graph g, std::string label) : graph_(std::move(g)), label_(std::move(label)) {
  if (graph_.size() == 0) throw InputError("finite family: empty graph");
}

Section FiniteFamily::section(int level) const {
  require_level(level);
  Section s;
  s.level = level;
  s.graph = graph_;
  s.deficiency = Eigen::VectorXd::Zero(graph_.size());
  s.tags.resize(graph_.size());
  for (Index x = 0; x < graph_.size(); ++x) s.tags[x].base = long(x);
  return s;
}

TailMetadata FiniteFamily::tail() const {
  TailMetadata t;
  t.declared = true;
  t.inf_measure = graph_.measure().minCoeff();
  t.sup_rate = ((graph_.row_sums() + graph_.killing()).array() / graph_.measure().array()).maxCoeff();
  return t;
}

Json FiniteFamily::to_json() const {
  return {{"template", "explicit-finite"}, {"parameters", {{"name", label_}, {"graph", graph_to_json(graph_)}}}};
}

// ---------------------------------------------------------------- lines

LineFamily::LineFamily(Kind kind, PowerRule weight, PowerRule measure, PowerRule killing)
    : kind_(kind), weight_(weight), measure_(measure), killing_(killing) {
  if (!(weight_.scale > 0) || !(measure_.scale > 0) || killing_.scale < 0)
    throw InputError("line family: weights and measure must be positive, killing nonnegative");
}

std::string LineFamily::name() const {
  if (kind_ == Kind::integer && weight_.power == 0 && weight_.scale == 1 && measure_.power == 0 &&
      measure_.scale == 1 && killing_.scale == 0)
    return "zline";
  if (kind_ == Kind::half && weight_.power == 3 && weight_.scale == 1 && measure_.power == 0 &&
      measure_.scale == 1 && killing_.scale == 0)
    return "fastline";
  std::string s = kind_ == Kind::half ? "halfline" : "integerline";
  s += ":p=" + fmt(weight_.power);
  if (weight_.scale != 1) s += ":bscale=" + fmt(weight_.scale);
  if (measure_.power != 0 || measure_.scale != 1) s += ":mp=" + fmt(measure_.power) + ":mscale=" + fmt(measure_.scale);
  if (killing_.scale != 0) s += ":cp=" + fmt(killing_.power) + ":cscale=" + fmt(killing_.scale);
  return s;
}

Index LineFamily::id(long x) const {
  if (kind_ == Kind::half) {
    if (x < 0) throw InputError("half-line position must be ≥ 0");
    return x;
  }
  return x > 0 ? 2 * x - 1 : -2 * x;
}

Index LineFamily::section_size(int level) const {
  return kind_ == Kind::half ? Index(level) + 1 : 2 * Index(level) + 1;
}

Section LineFamily::section(int level) const {
  require_level(level);
  const Index n = section_size(level);
  std::vector<Triplet> edges;
  Eigen::VectorXd c(n), m(n), d = Eigen::VectorXd::Zero(n);
  std::vector<VertexTag> tags(n);
  const long lo = kind_ == Kind::half ? 0 : -level;
  for (long x = lo; x <= level; ++x) {
    const Index i = id(x);
    const long r = std::labs(x);
    tags[i].base = x;
    m(i) = measure_(r);
    c(i) = killing_(r);
    if (x >= 0 && x < level) edges.emplace_back(i, id(x + 1), weight_(x));
    if (x < 0) edges.emplace_back(i, id(x + 1), weight_(r - 1));
  }
  d(id(level)) = weight_(level);
  if (kind_ == Kind::integer) d(id(-level)) = weight_(level);
  return make_section(level, n, edges, c, m, d, std::move(tags));
}

TailMetadata LineFamily::tail() const {
  TailMetadata t;
  t.declared = true;
  t.inf_measure = measure_.power >= 0 ? measure_.scale : 0.0;
  const bool summable = measure_.power < -1;
  auto m = measure_;
  t.rays.push_back({"+", summable, [m](long k) { return m(k); }});
  if (kind_ == Kind::integer) t.rays.push_back({"-", summable, [m](long k) { return m(k); }});
  const double top = std::max(weight_.power, killing_.scale > 0 ? killing_.power : weight_.power);
  if (top <= measure_.power) {
    double sup = 0;
    const double multiple = kind_ == Kind::integer ? 2.0 : 1.0;
    for (long k = 0; k <= 10000; ++k) {
      const double b = k == 0 ? multiple * weight_(0) : weight_(k - 1) + weight_(k);
      sup = std::max(sup, (b + killing_(k)) / measure_(k));
    }
    t.sup_rate = sup;
  }
  return t;
}

std::optional<RayStructure> LineFamily::rays() const {
  RayStructure rs;
  rs.root = 0;
  rs.root_measure = measure_(0);
  rs.root_killing = killing_(0);
  const auto b = weight_, m = measure_, c = killing_;
  std::function<std::optional<TailBound>(long)> tail;
  if (b.power > 2 && m.power <= 0 && c.power <= 0) {
    // Σ_{k≥N} (k+1)^{−p} ≤ ∫_N^∞ t^{−p}dt and (k−N+1)(k+1)^{−p} ≤ (k+1)^{1−p}.
    tail = [b, m, c](long N) -> std::optional<TailBound> {
      const double n = double(std::max<long>(N, 1)), p = b.power;
      return TailBound{std::pow(n, 1 - p) / (b.scale * (p - 1)), std::pow(n, 2 - p) / (b.scale * (p - 2)),
                       m(std::max<long>(N, 1)), c(std::max<long>(N, 1))};
    };
  }
  auto make = [&](std::string nm, std::function<Index(long)> vertex) {
    return RayTemplate{std::move(nm), [b](long k) { return b(k); }, [m](long k) { return m(k); },
                       [c](long k) { return c(k); }, std::move(vertex), tail};
  };
  if (kind_ == Kind::half) {
    rs.rays.push_back(make("+", [](long k) { return Index(k); }));
  } else {
    rs.rays.push_back(make("+", [](long k) { return Index(2 * k - 1); }));
    rs.rays.push_back(make("-", [](long k) { return Index(2 * k); }));
  }
  return rs;
}

Json LineFamily::to_json() const {
  return {{"template", kind_ == Kind::half ? "half-line" : "integer-line"},
          {"parameters", {{"weight", weight_.to_json()}, {"measure", measure_.to_json()}, {"killing", killing_.to_json()}}}};
}

// ---------------------------------------------------------------- jacobi

JacobiFamily::JacobiFamily(double lambda, double ratio) : lambda_(lambda), ratio_(ratio) {
  if (!(lambda > 0)) throw InputError("jacobi: λ must be positive");
  if (!(ratio > 0 && ratio < 1)) throw InputError("jacobi: ratio must lie in (0,1)");
}

std::string JacobiFamily::name() const { return "jacobi:" + fmt(lambda_); }
double JacobiFamily::alpha() const { return jacobi_alpha(lambda_); }
double JacobiFamily::measure(long x) const {
  const double v = jacobi_measure(lambda_, ratio_, x);
  if (!(v > 0)) throw InputError("jacobi: measure underflows at x = " + std::to_string(x));
  return v;
}
double JacobiFamily::killing(long x) const { return jacobi_killing(lambda_, ratio_, x); }

Section JacobiFamily::section(int level) const {
  require_level(level);
  const Index n = section_size(level);
  auto id = [](long x) { return Index(x > 0 ? 2 * x - 1 : -2 * x); };
  std::vector<Triplet> edges;
  Eigen::VectorXd c(n), m(n), d = Eigen::VectorXd::Zero(n);
  std::vector<VertexTag> tags(n);
  for (long x = -level; x <= level; ++x) {
    tags[id(x)].base = x;
    m(id(x)) = measure(x);
    c(id(x)) = killing(x);
    if (x < level) edges.emplace_back(id(x), id(x + 1), 1.0);
  }
  d(id(level)) = 1;
  d(id(-level)) = 1;
  return make_section(level, n, edges, c, m, d, std::move(tags));
}

TailMetadata JacobiFamily::tail() const {
  TailMetadata t;
  t.declared = true;
  t.inf_measure = 0.0;
  const double l = lambda_, q = ratio_;
  t.rays.push_back({"+", true, [l, q](long k) { return jacobi_measure(l, q, k); }});
  t.rays.push_back({"-", q * std::exp(2 * l) < 1, [l, q](long k) { return jacobi_measure(l, q, -k); }});
  return t;
}

std::optional<RayStructure> JacobiFamily::rays() const {
  RayStructure rs;
  rs.root = 0;
  rs.root_measure = measure(0);
  rs.root_killing = killing(0);
  const double l = lambda_, q = ratio_;
  for (int sign : {1, -1}) {
    RayTemplate r;
    r.name = sign > 0 ? "+" : "-";
    r.weight = [](long) { return 1.0; };
    r.measure = [l, q, sign](long k) { return jacobi_measure(l, q, sign * k); };
    r.killing = [l, q, sign](long k) { return jacobi_killing(l, q, sign * k); };
    r.vertex = [sign](long k) { return Index(sign > 0 ? 2 * k - 1 : 2 * k); };
    rs.rays.push_back(std::move(r));
  }
  return rs;
}

Json JacobiFamily::to_json() const {
  return {{"template", "jacobi"},
          {"parameters", {{"lambda", lambda_}, {"ratio", ratio_}}},
          {"metadata", {{"alpha", alpha()}, {"weight_sum", weight_sum()}}}};
}

// ---------------------------------------------------------------- tree

TreeFamily::TreeFamily(int branching) : branching_(branching) {
  if (branching < 1) throw InputError("tree: branching must be ≥ 1");
}

Index TreeFamily::section_size(int level) const {
  Index total = 0, layer = 1;
  for (int d = 0; d <= level; ++d) {
    total += layer;
    layer *= branching_;
  }
  return total;
}

Section TreeFamily::section(int level) const {
  require_level(level);
  const Index n = section_size(level);
  const Index inner = section_size(level - 1);
  std::vector<Triplet> edges;
  edges.reserve(n);
  std::vector<VertexTag> tags(n);
  long depth = 0;
  Index next_layer = 1;
  for (Index v = 0; v < n; ++v) {
    if (v == next_layer) {
      ++depth;
      next_layer = section_size(int(depth));
    }
    tags[v] = {long(v), -1, depth};
    if (v < inner)
      for (int j = 0; j < branching_; ++j) edges.emplace_back(v, branching_ * v + 1 + j, 1.0);
  }
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  d.tail(n - inner).setConstant(branching_);
  return make_section(level, n, edges, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n), d, std::move(tags));
}

TailMetadata TreeFamily::tail() const {
  TailMetadata t;
  t.declared = true;
  t.inf_measure = 1.0;
  t.sup_rate = branching_ + 1.0;
  return t;
}

Json TreeFamily::to_json() const { return {{"template", "tree"}, {"parameters", {{"branching", branching_}}}}; }

// ---------------------------------------------------------------- geostar

Section GeoStarFamily::section(int level) const {
  require_level(level);
  const Index n = level + 1;
  std::vector<Triplet> edges;
  Eigen::VectorXd m(n), d = Eigen::VectorXd::Zero(n);
  std::vector<VertexTag> tags(n);
  m(0) = 1;
  for (Index y = 1; y < n; ++y) {
    edges.emplace_back(0, y, std::ldexp(1.0, -int(y)));
    m(y) = std::ldexp(1.0, -2 * int(y));
    tags[y] = {long(y), -1, 1};
  }
  d(0) = std::ldexp(1.0, -level);
  return make_section(level, n, edges, Eigen::VectorXd::Zero(n), m, d, std::move(tags));
}

TailMetadata GeoStarFamily::tail() const {
  TailMetadata t;
  t.declared = true;
  t.inf_measure = 0.0;
  return t;
}

// ---------------------------------------------------------------- decorations

long supergraph_multiplicity(double row_sum) {
  if (!(row_sum >= 0) || !std::isfinite(row_sum)) throw InputError("supergraph: invalid row sum");
  if (row_sum >= 9e15) throw InputError("supergraph: multiplicity overflows");
  return long(std::floor(row_sum)) + 1;
}

long Multiplicity::count(Index base_id, double row_sum) const {
  switch (rule) {
    case Rule::supergraph: return supergraph_multiplicity(row_sum);
    case Rule::unit: return 1;
    case Rule::stride: return base_id % stride == stride - 1 ? 1 : 0;
  }
  return 0;
}

Json Multiplicity::to_json() const {
  switch (rule) {
    case Rule::supergraph: return "supergraph";
    case Rule::unit: return "unit";
    case Rule::stride: return {{"stride", stride}};
  }
  return nullptr;
}

Multiplicity Multiplicity::from_json(const Json& j) {
  Multiplicity m;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "supergraph") m.rule = Rule::supergraph;
    else if (s == "unit") m.rule = Rule::unit;
    else throw InputError("unknown multiplicity rule: " + s);
  } else if (j.is_object() && j.contains("stride")) {
    m.rule = Rule::stride;
    m.stride = j.at("stride").get<long>();
    if (m.stride < 1) throw InputError("stride must be ≥ 1");
  } else {
    throw InputError("malformed multiplicity rule");
  }
  return m;
}

DecoratedFamily::DecoratedFamily(FamilyPtr base, Options options) : base_(std::move(base)), opts_(options) {
  if (!base_) throw InputError("decorated family: missing base");
  if (opts_.shape == Shape::whisker && opts_.length < 1) throw InputError("whisker length must be ≥ 1");
  if (opts_.depth_scale < 1) throw InputError("ray depth scale must be ≥ 1");
}

std::string DecoratedFamily::name() const {
  std::string s = opts_.shape == Shape::ray ? "supergraph" : (opts_.length == 1 ? "pendants" : "whiskers" + std::to_string(opts_.length));
  if (!opts_.lumped) s += "-explicit";
  if (opts_.multiplicity.rule == Multiplicity::Rule::unit) s += "[unit]";
  if (opts_.multiplicity.rule == Multiplicity::Rule::stride) s += "[stride" + std::to_string(opts_.multiplicity.stride) + "]";
  return s + ":" + base_->name();
}

bool DecoratedFamily::finite() const { return base_->finite() && opts_.shape == Shape::whisker; }

long DecoratedFamily::decoration_depth(int level) const {
  return opts_.shape == Shape::ray ? opts_.depth_scale * level : opts_.length;
}

std::vector<long> DecoratedFamily::multiplicities(const Section& base_section) const {
  std::vector<long> k(base_section.size());
  for (Index x = 0; x < base_section.size(); ++x)
    k[x] = opts_.multiplicity.count(x, base_section.graph.row_sums()(x) + base_section.deficiency(x));
  return k;
}

Index DecoratedFamily::section_size(int level) const {
  const Section base = base_->section(level);
  const auto k = multiplicities(base);
  Index n = base.size();
  const long depth = decoration_depth(level);
  for (long kx : k) n += (opts_.lumped ? (kx > 0 ? 1 : 0) : kx) * depth;
  return n;
}

std::vector<Index> DecoratedFamily::base_ids(int level) const {
  // Replays the ordering of section() without building edges.
  std::vector<Index> ids;
  const Section base = base_->section(level);
  const auto k = multiplicities(base);
  Index next = 0, prev_size = 0;
  for (int lev = 1; lev <= level; ++lev) {
    const Index size = base_->section_size(lev);
    for (Index x = prev_size; x < size; ++x) ids.push_back(next++);
    const long d_from_old = lev == 1 ? 1 : decoration_depth(lev - 1) + 1;
    const long d_to = decoration_depth(lev);
    for (Index x = 0; x < size; ++x) {
      const long copies = opts_.lumped ? (k[x] > 0 ? 1 : 0) : k[x];
      const long from = x < prev_size ? d_from_old : 1;
      if (d_to >= from) next += copies * (d_to - from + 1);
    }
    prev_size = size;
  }
  return ids;
}

Section DecoratedFamily::section(int level) const {
  require_level(level);
  const Section base = base_->section(level);
  const auto k = multiplicities(base);
  const Index nb = base.size();

  // Path (x, j) for copy j at base vertex x; `tip` tracks its deepest vertex.
  std::vector<Index> path_offset(nb + 1, 0);
  for (Index x = 0; x < nb; ++x)
    path_offset[x + 1] = path_offset[x] + (opts_.lumped ? (k[x] > 0 ? 1 : 0) : k[x]);
  std::vector<Index> tip(path_offset[nb], -1);
  std::vector<Index> base_pos(nb, -1);

  std::vector<VertexTag> tags;
  std::vector<double> mvec, cvec, dvec;
  std::vector<Triplet> edges;
  auto push = [&](VertexTag t, double m, double c, double d) {
    tags.push_back(t);
    mvec.push_back(m);
    cvec.push_back(c);
    dvec.push_back(d);
    return Index(tags.size() - 1);
  };

  Index prev_size = 0;
  for (int lev = 1; lev <= level; ++lev) {
    const Index size = base_->section_size(lev);
    for (Index x = prev_size; x < size; ++x) {
      VertexTag t = base.tags[x];
      t.ray = -1;
      base_pos[x] = push(t, base.graph.measure()(x), base.graph.killing()(x), base.deficiency(x));
    }
    const long d_to = decoration_depth(lev);
    for (Index x = 0; x < size; ++x) {
      const long from = x < prev_size ? decoration_depth(lev - 1) + 1 : 1;
      const double unit = opts_.lumped ? double(k[x]) : 1.0;
      for (Index p = path_offset[x]; p < path_offset[x + 1]; ++p) {
        for (long depth = from; depth <= d_to; ++depth) {
          const Index parent = depth == 1 ? base_pos[x] : tip[p];
          const bool open_tip = opts_.shape == Shape::ray && depth == decoration_depth(level);
          const Index v = push({base.tags[x].base, long(p - path_offset[x]), depth}, unit, 0.0, open_tip ? unit : 0.0);
          edges.emplace_back(parent, v, unit);
          tip[p] = v;
        }
      }
    }
    prev_size = size;
  }
  // Base edges between base vertices.
  const auto& b = base.graph.weights();
  for (Index col = 0; col < b.outerSize(); ++col)
    for (SpMat<double>::InnerIterator it(b, col); it; ++it)
      if (it.row() < it.col()) edges.emplace_back(base_pos[it.row()], base_pos[it.col()], it.value());

  const Index n = Index(tags.size());
  Eigen::Map<Eigen::VectorXd> m(mvec.data(), n), c(cvec.data(), n), d(dvec.data(), n);
  return make_section(level, n, edges, c, m, d, std::move(tags));
}

TailMetadata DecoratedFamily::tail() const {
  TailMetadata t = base_->tail();
  if (!t.declared) return t;
  if (t.inf_measure) t.inf_measure = std::min(*t.inf_measure, 1.0);
  if (opts_.shape == Shape::ray) t.rays.push_back({"decoration", false, [](long) { return 1.0; }});
  t.sup_rate.reset();
  return t;
}

Json DecoratedFamily::to_json() const {
  return {{"template", "ray-decorated"},
          {"parameters",
           {{"base", base_->to_json()},
            {"shape", opts_.shape == Shape::ray ? "ray" : "whisker"},
            {"length", opts_.length},
            {"depth_scale", opts_.depth_scale},
            {"lumped", opts_.lumped},
            {"multiplicity", opts_.multiplicity.to_json()}}}};
}

std::vector<Index> DecoratedFamily::default_probes() const {
  const auto probes = base_->default_probes();
  Index top = *std::max_element(probes.begin(), probes.end());
  int level = 1;
  while (base_->section_size(level) <= top) ++level;
  const auto ids = base_ids(level);
  std::vector<Index> out;
  for (Index p : probes) out.push_back(ids[p]);
  return out;
}

CutFamily::CutFamily(std::shared_ptr<const DecoratedFamily> decorated) : decorated_(std::move(decorated)) {
  if (!decorated_) throw InputError("cut family: missing decorated family");
}

Section CutFamily::section(int level) const {
  Section s = decorated_->base()->section(level);
  const auto k = decorated_->multiplicities(s);
  Eigen::VectorXd c = s.graph.killing();
  for (Index x = 0; x < s.size(); ++x) c(x) += double(k[x]);
  s.graph = Graph(s.graph.weights(), c, s.graph.measure());
  return s;
}

TailMetadata CutFamily::tail() const {
  TailMetadata t = decorated_->base()->tail();
  t.sup_rate.reset();
  return t;
}

std::optional<RayStructure> CutFamily::rays() const {
  auto rs = decorated_->base()->rays();
  if (!rs) return rs;
  const Multiplicity mult = decorated_->options().multiplicity;
  double root_sum = 0;
  for (const auto& r : rs->rays) root_sum += r.weight(0);
  rs->root_killing += double(mult.count(rs->root, root_sum));
  for (auto& r : rs->rays) {
    auto killing = r.killing;
    auto weight = r.weight;
    auto vertex = r.vertex;
    r.killing = [=](long k) { return killing(k) + double(mult.count(vertex(k), weight(k - 1) + weight(k))); };
    if (r.tail) {
      if (mult.rule == Multiplicity::Rule::supergraph) {
        r.tail = nullptr;
      } else {
        auto tail = r.tail;
        r.tail = [tail](long N) {
          auto t = tail(N);
          if (t) t->sup_killing += 1.0;
          return t;
        };
      }
    }
  }
  return rs;
}

Json CutFamily::to_json() const { return {{"template", "cut"}, {"parameters", {{"decorated", decorated_->to_json()}}}}; }

// ---------------------------------------------------------------- registry

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: " + s);
  }
  if (used != s.size()) throw InputError("not a number: " + s);
  return v;
}

}  // namespace

FamilyPtr make_builtin(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

  auto decorate = [&](DecoratedFamily::Shape shape, bool lumped) -> FamilyPtr {
    if (rest.empty()) throw InputError(head + " needs a base family, e.g. " + head + ":fastline");
    DecoratedFamily::Options o;
    o.shape = shape;
    o.length = 1;
    o.lumped = lumped;
    return std::make_shared<DecoratedFamily>(make_builtin(rest), o);
  };
  if (head == "supergraph") return decorate(DecoratedFamily::Shape::ray, true);
  if (head == "supergraph-explicit") return decorate(DecoratedFamily::Shape::ray, false);
  if (head == "pendants") return decorate(DecoratedFamily::Shape::whisker, true);
  if (head == "pendants-explicit") return decorate(DecoratedFamily::Shape::whisker, false);

  std::vector<std::pair<std::string, std::string>> kv;
  if (!rest.empty())
    for (const auto& tok : split(rest, ':')) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) kv.emplace_back("", tok);
      else kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
  auto only_keys = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : kv)
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        throw InputError("unknown parameter '" + k + "' for " + head);
  };

  if (head == "zline" || head == "fastline") {
    only_keys({});
    return head == "zline" ? std::make_shared<LineFamily>(LineFamily::Kind::integer, PowerRule{1, 0})
                           : std::make_shared<LineFamily>(LineFamily::Kind::half, PowerRule{1, 3});
  }
  if (head == "halfline" || head == "integerline") {
    only_keys({"p", "b", "bscale", "mp", "mscale", "cp", "cscale"});
    PowerRule b{1, 0}, m{1, 0}, c{0, 0};
    static const std::regex rule(R"(\(n\+1\)\^([-+0-9.eE]+))");
    for (const auto& [k, v] : kv) {
      std::smatch match;
      if (k == "p") b.power = parse_number(v);
      else if (k == "b") {
        if (!std::regex_match(v, match, rule)) throw InputError("expected b=(n+1)^p, got " + v);
        b.power = parse_number(match[1]);
      } else if (k == "bscale") b.scale = parse_number(v);
      else if (k == "mp") m.power = parse_number(v);
      else if (k == "mscale") m.scale = parse_number(v);
      else if (k == "cp") c.power = parse_number(v);
      else if (k == "cscale") c.scale = parse_number(v);
    }
    return std::make_shared<LineFamily>(head == "halfline" ? LineFamily::Kind::half : LineFamily::Kind::integer, b, m, c);
  }
  if (head == "jacobi") {
    only_keys({"", "lambda", "q"});
    double lambda = 1, q = 0.5;
    for (const auto& [k, v] : kv) {
      if (k.empty() || k == "lambda") lambda = parse_number(v);
      else q = parse_number(v);
    }
    return std::make_shared<JacobiFamily>(lambda, q);
  }
  if (head == "tree") {
    only_keys({"", "branching"});
    int branching = 2;
    for (const auto& [k, v] : kv) branching = int(parse_number(v));
    return std::make_shared<TreeFamily>(branching);
  }
  if (head == "geostar") {
    only_keys({});
    return std::make_shared<GeoStarFamily>();
  }
  throw InputError("unknown built-in family: " + spec);
}

FamilyPtr family_from_json(const Json& j) {
  if (j.contains("builtin")) return make_builtin(j.at("builtin").get<std::string>());
  if (!j.contains("template")) {
    if (j.contains("edges") || j.contains("vertices")) return std::make_shared<FiniteFamily>(graph_from_json(j));
    throw InputError("family spec needs a 'template' field");
  }
  const auto tmpl = j.at("template").get<std::string>();
  const Json p = j.value("parameters", Json::object());
  if (tmpl == "explicit-finite")
    return std::make_shared<FiniteFamily>(graph_from_json(p.at("graph")), p.value("name", std::string("finite")));
  if (tmpl == "half-line" || tmpl == "integer-line")
    return std::make_shared<LineFamily>(tmpl == "half-line" ? LineFamily::Kind::half : LineFamily::Kind::integer,
                                        p.contains("weight") ? PowerRule::from_json(p.at("weight")) : PowerRule{},
                                        p.contains("measure") ? PowerRule::from_json(p.at("measure")) : PowerRule{},
                                        p.contains("killing") ? PowerRule::from_json(p.at("killing")) : PowerRule{0, 0});
  if (tmpl == "jacobi") return std::make_shared<JacobiFamily>(p.value("lambda", 1.0), p.value("ratio", 0.5));
  if (tmpl == "tree") return std::make_shared<TreeFamily>(p.value("branching", 2));
  if (tmpl == "geostar") return std::make_shared<GeoStarFamily>();
  if (tmpl == "ray-decorated" || tmpl == "cut") {
    const Json& dj = tmpl == "cut" ? p.at("decorated").at("parameters") : p;
    DecoratedFamily::Options o;
    const auto shape = dj.value("shape", std::string("ray"));
    if (shape != "ray" && shape != "whisker") throw InputError("unknown decoration shape: " + shape);
    o.shape = shape == "ray" ? DecoratedFamily::Shape::ray : DecoratedFamily::Shape::whisker;
    o.length = dj.value("length", 1L);
    o.depth_scale = dj.value("depth_scale", 1L);
    o.lumped = dj.value("lumped", false);
    if (dj.contains("multiplicity")) o.multiplicity = Multiplicity::from_json(dj.at("multiplicity"));
    auto dec = std::make_shared<DecoratedFamily>(family_from_json(dj.at("base")), o);
    if (tmpl == "cut") return std::make_shared<CutFamily>(dec);
    return dec;
  }
  throw InputError("unknown family template: " + tmpl);
}

}  // namespace dfg
