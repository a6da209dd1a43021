#include "dfg/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "dfg/io.hpp"

namespace dfg {

Json RunManifest::to_json() const {
  return {{"command", command},       {"inputs", inputs},
          {"parameters", parameters}, {"output_dir", output_dir},
          {"tool_version", tool_version}};
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.parameters = j.value("parameters", Json::object());
    m.output_dir = j.value("output_dir", std::string());
    m.tool_version = j.value("tool_version", std::string(kToolVersion));
    return m;
  } catch (const Json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
}

std::string RunManifest::hash() const {
  // Object keys are sorted, so dump() is canonical. The output directory is
  // left out: replaying elsewhere must reproduce the same bytes.
  Json j = to_json();
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path default_output_dir() {
  if (const char* dir = std::getenv("DFG_OUTPUT_DIR"); dir && *dir) return dir;
  return "dfg-out";
}

void write_json(const std::filesystem::path& path, Json j, const std::string& manifest_hash) {
  j["manifest_hash"] = manifest_hash;
  j["schema_version"] = kSchemaVersion;
  write_text(path, j.dump(2) + "\n");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header, const std::string& manifest_hash)
    : columns_(header.size()), text_("# manifest " + manifest_hash + "\n") {
  row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ConsistencyError("csv: row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text(path, text_); }

namespace {

// JSON has no inf/nan; keep them as strings.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(fmt(v)); }

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Json schedule_json(const Schedule& s) {
  return {{"levels", s.levels}, {"solver_tol", s.solver_tol}, {"plateau", s.plateau}, {"ceiling", s.ceiling}};
}

}  // namespace

Json to_json(const MonotoneLimit& m) {
  Json values = Json::array();
  for (Index l = 0; l < m.values.rows(); ++l) values.push_back(vec(m.values.row(l).transpose()));
  Json status = Json::array();
  for (auto s : m.status) status.push_back(to_string(s));
  Json gaps = Json::array();
  for (double g : m.last_gap) gaps.push_back(num(g));
  return {{"probes", m.probes},
          {"levels", m.levels},
          {"sizes", m.sizes},
          {"values", values},
          {"direction", m.increasing ? "increasing" : "decreasing"},
          {"status", status},
          {"last_gap", gaps},
          {"worst_monotonicity", m.worst_monotonicity}};
}

Json to_json(const Certificate& c) {
  Json j{{"alpha", c.alpha},
         {"method", c.method},
         {"window", c.window},
         {"normalizer", num(c.normalizer)},
         {"sup_bound", num(c.sup_bound)},
         {"residual", num(c.residual)},
         {"probes", c.probes},
         {"probe_values", Json::array()}};
  for (double v : c.probe_values) j["probe_values"].push_back(num(v));
  if (!c.ray_kind.empty()) j["ray_kind"] = c.ray_kind;
  return j;
}

Json to_json(const EquivalenceTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) rows.push_back({{"item", r.item}, {"outcome", r.outcome}, {"evidence", r.evidence}});
  return {{"alpha", t.alpha},
          {"rows", rows},
          {"consistent", t.consistent},
          {"laplace_gap", num(t.laplace_gap)},
          {"heat_residual", num(t.heat_residual)},
          {"note", t.note}};
}

Json to_json(const HeatLossCurve& h) {
  Json levels = Json::array();
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    Json M = Json::array(), lost = Json::array(), killed = Json::array(), surv = Json::array();
    for (std::size_t t = 0; t < h.times.size(); ++t) {
      M.push_back(vec(h.M(l, t)));
      lost.push_back(vec(h.lost[l][t]));
      killed.push_back(vec(h.killed[l][t]));
      surv.push_back(vec(h.survival[l][t]));
    }
    levels.push_back({{"level", h.levels[l]}, {"M", M}, {"lost", lost}, {"killed", killed}, {"survival", surv}});
  }
  return {{"times", h.times},
          {"probes", h.probes},
          {"by_level", levels},
          {"max_balance_error", num(h.max_balance_error)},
          {"worst_time_monotonicity", num(h.worst_time_monotonicity)},
          {"worst_level_monotonicity", num(h.worst_level_monotonicity)}};
}

Json report_json(const CompletenessReport& r, const HeatLossCurve* heat, const std::vector<EquivalenceTable>& tables) {
  Json w = Json::array();
  for (const auto& b : r.w) {
    Json res = Json::array();
    for (double x : b.max_residual) res.push_back(num(x));
    w.push_back({{"alpha", b.alpha}, {"bounds", to_json(b.limit)}, {"solve_residual", res}});
  }
  Json certs = Json::array();
  for (std::size_t a = 0; a < r.certificates.size(); ++a) {
    Json c = r.certificates[a] ? to_json(*r.certificates[a]) : Json{{"alpha", r.alphas[a]}};
    c["note"] = a < r.certificate_notes.size() ? r.certificate_notes[a] : "";
    certs.push_back(c);
  }
  Json votes = Json::array();
  for (auto v : r.votes) votes.push_back(to_string(v));
  Json eq = Json::array();
  for (const auto& t : tables) eq.push_back(to_json(t));
  return {{"family", r.family},
          {"alphas", r.alphas},
          {"probes", r.probes},
          {"levels", r.schedule.levels},
          {"schedule", schedule_json(r.schedule)},
          {"w_bounds", w},
          {"M_curve", heat ? to_json(*heat) : Json(nullptr)},
          {"classification",
           {{"label", to_string(r.classification)},
            {"votes", votes},
            {"bounded_operator_shortcut", r.bounded_shortcut},
            {"certificates_below_bounds", r.certificates_consistent},
            {"rationale", r.rationale}}},
          {"certificates", certs},
          {"equivalence_table", eq}};
}

Json to_json(const SupergraphReport& r) {
  Json rays = Json::array();
  for (const auto& p : r.rays) {
    Json vals = Json::array();
    for (double v : p.values) vals.push_back(num(v));
    rays.push_back({{"alpha", p.alpha},
                    {"base_vertex", p.base_vertex},
                    {"values", vals},
                    {"max_ratio", num(p.max_ratio)},
                    {"threshold", p.threshold},
                    {"decays", p.decays},
                    {"growth_after_crossing", p.growth_after_crossing}});
  }
  return {{"base", r.base},
          {"supergraph", r.supergraph},
          {"probes", r.probes},
          {"base_report", report_json(r.base_report)},
          {"supergraph_report", report_json(r.super_report)},
          {"decreasing", r.decreasing},
          {"rays", rays}};
}

Json to_json(const ExtensionReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json cases = Json::array();
    for (const auto& t : c.cases)
      cases.push_back({{"case", t.name}, {"count", t.count}, {"max_value", num(t.max_value)}, {"violations", t.violations}});
    checks.push_back({{"alpha", c.alpha}, {"normalizer", c.normalizer}, {"window_vertices", c.window_vertices}, {"cases", cases}});
  }
  Json j{{"V", r.V}, {"W", r.W}, {"skipped", r.skipped}, {"note", r.note}, {"slack", r.slack},
         {"subgraph_report", report_json(r.subgraph_report)}, {"checks", checks}};
  if (!r.skipped) j["V_report"] = report_json(r.V_report);
  return j;
}

CsvWriter w_traces_csv(const CompletenessReport& r, const std::string& manifest_hash) {
  CsvWriter csv({"alpha", "level", "section_size", "probe", "value", "gap"}, manifest_hash);
  for (const auto& b : r.w) {
    const auto& m = b.limit;
    for (Index l = 0; l < m.values.rows(); ++l)
      for (std::size_t p = 0; p < m.probes.size(); ++p) {
        const double v = m.values(l, Index(p));
        const std::string gap = l == 0 ? "" : fmt(m.values(l - 1, Index(p)) - v);
        csv.row({fmt(b.alpha), std::to_string(m.levels[l]), std::to_string(m.sizes[l]), std::to_string(m.probes[p]),
                 fmt(v), gap});
      }
  }
  return csv;
}

CsvWriter heat_csv(const HeatLossCurve& h, const std::string& manifest_hash) {
  CsvWriter csv({"time", "level", "probe", "survival", "killed", "lost", "M"}, manifest_hash);
  for (std::size_t l = 0; l < h.levels.size(); ++l)
    for (std::size_t t = 0; t < h.times.size(); ++t)
      for (std::size_t p = 0; p < h.probes.size(); ++p) {
        const Index i = Index(p);
        csv.row({fmt(h.times[t]), std::to_string(h.levels[l]), std::to_string(h.probes[p]),
                 fmt(h.survival[l][t](i)), fmt(h.killed[l][t](i)), fmt(h.lost[l][t](i)), fmt(1 - h.lost[l][t](i))});
      }
  return csv;
}

CsvWriter tally_csv(const SimulationTally& t, const std::string& manifest_hash) {
  CsvWriter csv({"outcome", "count", "fraction", "stderr"}, manifest_hash);
  auto add = [&](const char* name, const Proportion& p) {
    csv.row({name, std::to_string(p.count), fmt(p.fraction), fmt(p.standard_error)});
  };
  add("alive", t.alive);
  add("killed", t.killed);
  add("exploded", t.exploded);
  add("censored", t.censored);
  for (const auto& [x, c] : t.occupancy) add(("alive_at_" + std::to_string(x)).c_str(), t.occupancy_at(x));
  return csv;
}

}  // namespace dfg
