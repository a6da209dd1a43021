#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dfg/completeness.hpp"
#include "dfg/mcsim.hpp"
#include "dfg/scenarios.hpp"

namespace dfg {

inline constexpr const char* kToolVersion = "dfg 1.0";
inline constexpr int kSchemaVersion = 1;

/// Everything needed to re-run a command. Contains no timestamps, so equal
/// manifests hash equally and replays reproduce outputs byte for byte.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  Json parameters = Json::object();
  std::string output_dir;
  std::string tool_version = kToolVersion;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
  /// FNV-1a 64 of the canonical JSON without output_dir, as 16 hex digits.
  std::string hash() const;
};

/// $DFG_OUTPUT_DIR, or "dfg-out" in the working directory.
std::filesystem::path default_output_dir();

/// Adds "manifest_hash" and "schema_version" and writes pretty JSON.
void write_json(const std::filesystem::path& path, Json j, const std::string& manifest_hash);

/// CSV with a leading "# manifest <hash>" comment line.
class CsvWriter {
 public:
  CsvWriter(std::vector<std::string> header, const std::string& manifest_hash);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::string text_;
};

/// Round-trip formatting of doubles (%.17g), "inf"/"nan" spelled out.
std::string fmt(double v);

/// FNV-1a 64 of arbitrary bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

Json to_json(const MonotoneLimit& m);
Json to_json(const Certificate& c);
Json to_json(const EquivalenceTable& t);
Json to_json(const HeatLossCurve& h);
/// {family, alphas, probes, levels, w_bounds, M_curve, classification,
///  certificates, equivalence_table}
Json report_json(const CompletenessReport& r, const HeatLossCurve* heat = nullptr,
                 const std::vector<EquivalenceTable>& tables = {});
Json to_json(const SupergraphReport& r);
Json to_json(const ExtensionReport& r);

/// Per-level traces: level, section_size, probe, value, gap (to previous level).
CsvWriter w_traces_csv(const CompletenessReport& r, const std::string& manifest_hash);
/// time, level, probe, survival, killed, lost, M
CsvWriter heat_csv(const HeatLossCurve& h, const std::string& manifest_hash);
CsvWriter tally_csv(const SimulationTally& t, const std::string& manifest_hash);

}  // namespace dfg
