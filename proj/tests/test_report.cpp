#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "dfg/io.hpp"
#include "dfg/report.hpp"

using namespace dfg;
namespace fs = std::filesystem;

TEST_CASE("manifest hash ignores the output directory only") {
  RunManifest m;
  m.command = "probe";
  m.inputs = {"fastline"};
  m.parameters = {{"alphas", {0.5, 1, 2}}, {"levels", {8, 16}}};
  m.output_dir = "/a";
  RunManifest n = m;
  n.output_dir = "/b";
  CHECK(m.hash() == n.hash());
  CHECK(m.hash().size() == 16);
  n.parameters["levels"] = {8, 32};
  CHECK(m.hash() != n.hash());
  const RunManifest back = RunManifest::from_json(m.to_json());
  CHECK(back.hash() == m.hash());
  CHECK(back.output_dir == m.output_dir);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("numbers round-trip through fmt") {
  for (double v : {0.1, 1.0 / 3, 1e-300, 6.02214076e23, -2.5}) CHECK(std::stod(fmt(v)) == v);
  CHECK(fmt(INFINITY) == "inf");
  CHECK(fmt(NAN) == "nan");
}

TEST_CASE("every output file carries the manifest hash") {
  const fs::path dir = fs::temp_directory_path() / "dfg_test_report";
  fs::create_directories(dir);
  write_json(dir / "x.json", {{"value", 1}}, "00000000deadbeef");
  const Json j = read_json(dir / "x.json");
  CHECK(j.at("manifest_hash") == "00000000deadbeef");
  CHECK(j.at("schema_version") == kSchemaVersion);

  CsvWriter csv({"a", "b"}, "00000000deadbeef");
  csv.row({"1", "2"});
  csv.save(dir / "x.csv");
  std::ifstream in(dir / "x.csv");
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  CHECK(first == "# manifest 00000000deadbeef");
  CHECK(second == "a,b");
  CHECK_THROWS_AS(csv.row({"only one"}), ConsistencyError);
  fs::remove_all(dir);
}

TEST_CASE("report JSON has the documented keys") {
  const auto fast = make_builtin("fastline");
  const auto probes = fast->default_probes();
  const Schedule sch = Schedule::doubling(8, 32);
  const auto rep = classify(*fast, probes, sch);
  const std::vector<double> times{0.5, 1};
  const auto heat = compute_M(*fast, times, probes, sch);
  const auto table = verify_equivalences(*fast, 1.0, times, probes, sch);
  const Json j = report_json(rep, &heat, {table});
  for (const char* key : {"family", "alphas", "probes", "levels", "w_bounds", "M_curve", "classification",
                          "certificates", "equivalence_table"})
    CHECK(j.contains(key));
  CHECK(j.at("classification").at("label") == "SI-certified-heuristic");

  const auto traces = w_traces_csv(rep, "h").str();
  CHECK(traces.rfind("# manifest h\nalpha,level,section_size,probe,value,gap\n", 0) == 0);
}
