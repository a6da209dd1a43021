#include <fstream>
#include <map>
#include <sstream>

#include "dfg/io.hpp"

namespace dfg {

namespace {

std::string key_of(const Json& id) {
  if (id.is_string()) return id.get<std::string>();
  if (id.is_number_integer()) return std::to_string(id.get<long long>());
  throw InputError("vertex ids must be strings or integers");
}

double weight_of(const Json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + " must be a number");
  return v.get<double>();
}

}  // namespace

Graph graph_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("graph spec must be a JSON object");
  std::vector<std::string> names;
  std::map<std::string, Index> index;
  auto add_vertex = [&](const std::string& k) {
    auto [it, fresh] = index.emplace(k, Index(names.size()));
    if (fresh) names.push_back(k);
    return it->second;
  };
  if (j.contains("vertices"))
    for (const auto& v : j.at("vertices")) {
      const auto k = key_of(v);
      if (index.count(k)) throw InputError("duplicate vertex id: " + k);
      add_vertex(k);
    }
  const bool closed = j.contains("vertices");
  auto lookup = [&](const Json& id) {
    const auto k = key_of(id);
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    if (closed) throw InputError("edge endpoint is not a listed vertex: " + k);
    return add_vertex(k);
  };

  std::map<std::pair<Index, Index>, double> directed;
  for (const auto& e : j.value("edges", Json::array())) {
    if (!e.is_array() || e.size() != 3) throw InputError("edges must be [id, id, weight] triples");
    const Index x = lookup(e[0]), y = lookup(e[1]);
    if (!directed.emplace(std::pair{x, y}, weight_of(e[2], "edge weight")).second)
      throw InputError("edge listed twice: " + names[x] + "," + names[y]);
  }
  std::vector<Eigen::Triplet<double, Index>> trip;
  for (const auto& [xy, w] : directed) {
    trip.emplace_back(xy.first, xy.second, w);
    if (xy.first != xy.second && !directed.count({xy.second, xy.first})) trip.emplace_back(xy.second, xy.first, w);
  }
  const Index n = Index(names.size());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n), m = Eigen::VectorXd::Ones(n);
  auto fill = [&](const char* field, Eigen::VectorXd& target) {
    if (!j.contains(field)) return;
    const auto& obj = j.at(field);
    if (!obj.is_object()) throw InputError(std::string(field) + " must map ids to values");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      auto found = index.find(it.key());
      if (found == index.end()) throw InputError(std::string(field) + " refers to unknown vertex " + it.key());
      target(found->second) = weight_of(it.value(), field);
    }
  };
  fill("killing", c);
  fill("measure", m);
  SpMat<double> b(n, n);
  b.setFromTriplets(trip.begin(), trip.end());
  return Graph(std::move(b), std::move(c), std::move(m), std::move(names));
}

Json graph_to_json(const Graph& g) {
  Json j;
  j["vertices"] = Json::array();
  for (Index x = 0; x < g.size(); ++x) j["vertices"].push_back(g.name(x));
  j["edges"] = Json::array();
  const auto& b = g.weights();
  for (Index col = 0; col < b.outerSize(); ++col)
    for (SpMat<double>::InnerIterator it(b, col); it; ++it) {
      const Index x = it.row(), y = it.col();
      // One entry per symmetric pair; both directions when they differ.
      if (x < y || (x > y && b.coeff(y, x) != it.value()) || x == y)
        j["edges"].push_back({g.name(x), g.name(y), it.value()});
    }
  j["killing"] = Json::object();
  j["measure"] = Json::object();
  for (Index x = 0; x < g.size(); ++x) {
    if (g.killing()(x) != 0) j["killing"][g.name(x)] = g.killing()(x);
    j["measure"][g.name(x)] = g.measure()(x);
  }
  return j;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

FamilyPtr load_family(const std::string& path_or_name) {
  if (std::filesystem::exists(path_or_name)) {
    const Json j = read_json(path_or_name);
    try {
      return family_from_json(j);
    } catch (const Json::exception& e) {
      throw InputError(std::string("malformed family spec: ") + e.what());
    }
  }
  return make_builtin(path_or_name);
}

}  // namespace dfg
