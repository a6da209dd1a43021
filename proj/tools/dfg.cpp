// dfg — command line front end. Every command is first turned into a
// RunManifest and then executed from it, so `dfg replay` re-runs exactly the
// same code path.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dfg/io.hpp"
#include "dfg/report.hpp"
#include "dfg/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace dfg;

namespace {

enum Exit { ok = 0, domain = 1, io = 2, consistency = 3 };

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("not a number: '" + item + "'");
    }
  }
  return out;
}

/// "a:b" doubles from a to b; "a,b,c" lists levels.
std::vector<int> parse_levels(const std::string& text) {
  if (auto colon = text.find(':'); colon != std::string::npos) {
    const int a = std::stoi(text.substr(0, colon)), b = std::stoi(text.substr(colon + 1));
    return Schedule::doubling(a, b).levels;
  }
  std::vector<int> out;
  for (double v : parse_doubles(text)) out.push_back(int(v));
  return out;
}

Schedule schedule_from(const Json& p) {
  Schedule s;
  s.levels = p.at("levels").get<std::vector<int>>();
  s.solver_tol = p.value("tol", 1e-12);
  s.check();
  return s;
}

std::vector<Index> probes_from(const Json& p, const Family& family) {
  auto probes = p.value("probes", std::vector<Index>{});
  return probes.empty() ? family.default_probes() : probes;
}

std::string file_digest(const std::string& path_or_name) {
  if (!fs::exists(path_or_name)) return "builtin";
  std::ifstream in(path_or_name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

std::string axiom_name(Axiom a) {
  switch (a) {
    case Axiom::symmetry: return "symmetry";
    case Axiom::diagonal: return "diagonal";
    case Axiom::negative_weight: return "negative-weight";
    case Axiom::negative_killing: return "negative-killing";
    case Axiom::measure: return "measure";
    case Axiom::non_finite: return "non-finite";
  }
  return "?";
}

struct Run {
  RunManifest manifest;
  std::string hash;
  fs::path dir;

  explicit Run(RunManifest m, const std::optional<fs::path>& out = std::nullopt) : manifest(std::move(m)) {
    hash = manifest.hash();
    const fs::path root = out ? *out : manifest.output_dir.empty() ? default_output_dir() : fs::path(manifest.output_dir);
    manifest.output_dir = root.string();
    dir = root / (manifest.command + "-" + hash);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_json(dir / "manifest.json", manifest.to_json(), hash);
  }
  fs::path file(const std::string& name) const { return dir / name; }
};

int cmd_validate(const Run& run) {
  const Graph g = graph_from_json(read_json(run.manifest.inputs.at(0)));
  const auto report = validate(g);
  Json v = Json::array();
  for (const auto& e : report.violations) {
    v.push_back({{"axiom", axiom_name(e.axiom)}, {"x", e.x < 0 ? "" : g.name(e.x)},
                 {"y", e.y < 0 ? "" : g.name(e.y)}, {"message", e.message}});
    std::cout << "violation: " << e.message << "\n";
  }
  write_json(run.file("validation.json"), {{"valid", report.valid()}, {"vertices", g.size()}, {"violations", v}},
             run.hash);
  std::cout << (report.valid() ? "valid" : "invalid") << " (" << g.size() << " vertices)\n";
  return report.valid() ? ok : domain;
}

int cmd_probe(const Run& run) {
  const auto& p = run.manifest.parameters;
  const auto family = load_family(run.manifest.inputs.at(0));
  const Schedule schedule = schedule_from(p);
  const auto probes = probes_from(p, *family);
  ClassifyOptions opt;
  opt.alphas = p.at("alphas").get<std::vector<double>>();
  opt.epsilon = p.value("eps", 1e-3);
  opt.certificate_window = p.value("window", 0L);
  const auto report = classify(*family, probes, schedule, opt);
  const auto times = p.at("tgrid").get<std::vector<double>>();
  std::vector<EquivalenceTable> tables;
  for (double a : opt.alphas) tables.push_back(verify_equivalences(*family, a, times, probes, schedule, opt.epsilon));
  const auto heat = compute_M(*family, times, probes, schedule, schedule.solver_tol);
  write_json(run.file("report.json"), report_json(report, &heat, tables), run.hash);
  w_traces_csv(report, run.hash).save(run.file("w_traces.csv"));
  heat_csv(heat, run.hash).save(run.file("heat.csv"));
  std::cout << report.family << ": " << to_string(report.classification) << "\n" << report.rationale << "\n";
  bool consistent = report.certificates_consistent;
  for (const auto& t : tables) {
    std::cout << "equivalence table α=" << t.alpha << ": " << (t.consistent ? "consistent" : "INCONSISTENT")
              << " (laplace gap " << t.laplace_gap << ")\n";
    consistent = consistent && t.consistent;
  }
  std::cout << "outputs: " << run.dir.string() << "\n";
  return consistent ? ok : consistency;
}

int cmd_heat(const Run& run) {
  const auto& p = run.manifest.parameters;
  const auto family = load_family(run.manifest.inputs.at(0));
  const Schedule schedule = schedule_from(p);
  const auto probes = probes_from(p, *family);
  const auto times = p.at("tgrid").get<std::vector<double>>();
  const auto heat = compute_M(*family, times, probes, schedule, schedule.solver_tol);
  heat_csv(heat, run.hash).save(run.file("heat.csv"));
  write_json(run.file("heat.json"), {{"family", family->name()}, {"M_curve", to_json(heat)}}, run.hash);
  const auto last = heat.levels.size() - 1;
  for (std::size_t t = 0; t < times.size(); ++t)
    std::cout << "t=" << times[t] << "  M(" << probes.front() << ") = " << fmt(heat.M(last, t)(0)) << "\n";
  std::cout << "outputs: " << run.dir.string() << "\n";
  return heat.worst_time_monotonicity > 1e-9 || heat.worst_level_monotonicity > 1e-9 ? consistency : ok;
}

ClassifyOptions classify_options(const Json& p) {
  ClassifyOptions opt;
  opt.alphas = p.at("alphas").get<std::vector<double>>();
  opt.epsilon = p.value("eps", 1e-3);
  return opt;
}

int cmd_supergraph(const Run& run) {
  const auto& p = run.manifest.parameters;
  const auto base = load_family(run.manifest.inputs.at(0));
  DecoratedFamily::Options o;
  o.shape = p.value("single_vertex", false) ? DecoratedFamily::Shape::whisker : DecoratedFamily::Shape::ray;
  o.lumped = !p.value("explicit", false);
  const DecoratedFamily super(base, o);
  write_json(run.file("supergraph.json"), super.to_json(), run.hash);
  std::cout << "wrote " << run.file("supergraph.json").string() << "\n";
  if (!p.value("check", false)) return ok;
  const auto rep = supergraph_scenario(base, schedule_from(p), classify_options(p), p.value("single_vertex", false));
  write_json(run.file("supergraph_report.json"), to_json(rep), run.hash);
  std::cout << "base " << rep.base << ": " << to_string(rep.base_report.classification) << "\n"
            << "supergraph " << rep.supergraph << ": " << to_string(rep.super_report.classification) << "\n";
  return ok;
}

int cmd_subgraph(const Run& run) {
  const auto& p = run.manifest.parameters;
  const std::string input = run.manifest.inputs.at(0);
  const auto W = p.value("W", std::vector<std::string>{});
  if (p.value("extension", false)) {
    ExtensionOptions ext;
    ext.window = p.value("window", 64);
    const auto rep = extension_scenario(load_family(input), ext, schedule_from(p), classify_options(p));
    write_json(run.file("extension_report.json"), to_json(rep), run.hash);
    std::cout << "V " << rep.V << ", W " << rep.W << (rep.skipped ? " (skipped: " + rep.note + ")" : "") << "\n";
    long violations = 0;
    for (const auto& c : rep.checks)
      for (const auto& t : c.cases) violations += t.violations;
    std::cout << "extension violations: " << violations << "\n";
    return violations == 0 && !rep.skipped ? ok : domain;
  }
  const Json spec = fs::exists(input) ? read_json(input) : Json();
  if (spec.contains("vertices")) {
    const Graph g = graph_from_json(spec);
    std::vector<Index> ids;
    for (const auto& name : W) {
      Index found = -1;
      for (Index x = 0; x < g.size(); ++x)
        if (g.name(x) == name) found = x;
      if (found < 0) throw InputError("subgraph: unknown vertex '" + name + "'");
      ids.push_back(found);
    }
    const auto sub = dirichlet_subgraph(g, ids);
    std::vector<std::string> names;
    for (Index x : sub.vertices) names.push_back(g.name(x));
    const Graph named(sub.graph.weights(), sub.graph.killing(), sub.graph.measure(), names);
    write_json(run.file("subgraph.json"), graph_to_json(named), run.hash);
  } else {
    // decorated family: W = its base vertices
    auto fam = std::dynamic_pointer_cast<const DecoratedFamily>(load_family(input));
    if (!fam) throw InputError("subgraph: families need a decorated family (W = base vertices)");
    write_json(run.file("subgraph.json"), CutFamily(fam).to_json(), run.hash);
  }
  std::cout << "wrote " << run.file("subgraph.json").string() << "\n";
  return ok;
}

ProcessConfig process_from(const Json& p, FamilyPtr family) {
  ProcessConfig c;
  c.family = std::move(family);
  c.start = p.value("start", Index(0));
  c.horizon = p.value("horizon", 1.0);
  c.replicas = p.value("replicas", 100000L);
  c.jump_cap = p.value("cap", 1000000L);
  c.seed = p.value("seed", std::uint64_t(1));
  return c;
}

int cmd_simulate(const Run& run, unsigned threads) {
  const auto& p = run.manifest.parameters;
  ProcessConfig cfg = process_from(p, load_family(run.manifest.inputs.at(0)));
  cfg.threads = threads;
  const auto tally = simulate(cfg);
  Json j = tally.to_json();
  j["config"] = cfg.to_json();
  const auto times = p.value("tgrid", std::vector<double>{});
  if (!times.empty()) {
    const auto est = estimate_M_curve(cfg, times);
    CsvWriter csv({"time", "M", "lower95", "upper95", "censored"}, run.hash);
    for (std::size_t i = 0; i < times.size(); ++i)
      csv.row({fmt(times[i]), fmt(est.M[i]), fmt(est.lower[i]), fmt(est.upper[i]), fmt(est.censored[i])});
    csv.save(run.file("mcurve.csv"));
  }
  write_json(run.file("tally.json"), j, run.hash);
  tally_csv(tally, run.hash).save(run.file("tally.csv"));
  std::cout << "alive " << tally.alive.fraction << "  killed " << tally.killed.fraction << "  exploded "
            << tally.exploded.fraction << " ± " << tally.exploded.standard_error << "  censored "
            << tally.censored.fraction << "\n";
  if (tally.censoring_warning) std::cerr << "warning: censored fraction above 0.1%\n";
  return ok;
}

int cmd_counterexample(const Run& run) {
  using Big = boost::multiprecision::cpp_bin_float_100;  // u/m reaches 1e80 at |x| = 50
  const auto& p = run.manifest.parameters;
  const double lambda = p.at("lambda").get<double>(), ratio = p.value("ratio", 0.5);
  const JacobiFamily fam(lambda, ratio);
  const Big l(lambda), q(ratio), alpha = jacobi_alpha(l);
  Big worst = 0, l2 = 0;
  for (long x = -50; x <= 50; ++x) {
    const Big u = jacobi_eigenfunction(l, x);
    const Big lu = (Big(2) * u - jacobi_eigenfunction(l, x + 1) - jacobi_eigenfunction(l, x - 1) +
                    jacobi_killing(l, q, x) * u) /
                   jacobi_measure(l, q, x);
    worst = std::max(worst, Big(abs(lu + alpha * u)));
    l2 += jacobi_measure(l, q, x) * u * u;
  }
  const Json diag{{"lambda", lambda},
                  {"ratio", ratio},
                  {"alpha", alpha.convert_to<double>()},
                  {"alpha_closed_form", "e^lambda + e^-lambda - 2"},
                  {"max_residual_abs_x_le_50", worst.convert_to<double>()},
                  {"l2_partial_sum_abs_x_le_50", l2.convert_to<double>()},
                  {"weight_sum", fam.weight_sum()},
                  {"bounded", false},
                  {"summable_in_l2", true}};
  write_json(run.file("jacobi.json"), fam.to_json(), run.hash);
  write_json(run.file("diagnostics.json"), diag, run.hash);
  std::cout << std::setprecision(12) << "alpha = " << alpha.convert_to<double>()
            << "\nmax |(L+alpha)u| on |x|<=50: " << worst.convert_to<double>()
            << "\nl2(m) partial sum: " << l2.convert_to<double>() << " <= " << fam.weight_sum() << "\n";
  return ok;
}

int cmd_selfcheck(const Run& run) {
  const auto& p = run.manifest.parameters;
  SelfcheckOptions opt;
  opt.instances = p.value("instances", 200L);
  opt.seed = p.value("seed", std::uint64_t(7));
  const auto suites = run_property_suites(opt);
  Json j = Json::array();
  bool all = true;
  for (const auto& s : suites) {
    std::cout << (s.passed() ? "PASS " : "FAIL ") << s.name << "  (" << s.instances << " instances, worst error/tolerance "
              << s.worst << ")" << (s.first_failure.empty() ? "" : "  " + s.first_failure) << "\n";
    j.push_back({{"suite", s.name}, {"instances", s.instances}, {"failures", s.failures}, {"worst_over_tolerance", s.worst},
                 {"first_failure", s.first_failure}});
    all = all && s.passed();
  }
  write_json(run.file("selfcheck.json"), {{"suites", j}, {"passed", all}}, run.hash);
  return all ? ok : consistency;
}

int cmd_export(const Run& run) {
  const auto& p = run.manifest.parameters;
  const auto family = load_family(run.manifest.inputs.at(0));
  const Section s = family->section(p.at("level").get<int>());
  export_matrix_market(SectionOperator(s), run.file("operator.mtx").string(),
                       family->name() + " level " + std::to_string(s.level) + " manifest " + run.hash);
  std::cout << "wrote " << run.file("operator.mtx").string() << " (" << s.size() << " vertices)\n";
  return ok;
}

int execute(const RunManifest& m, const std::optional<fs::path>& out, unsigned threads) {
  for (const auto& input : m.inputs)
    if (fs::exists(input) && m.parameters.contains("input_digest") &&
        m.parameters["input_digest"] != file_digest(input))
      throw IoError("input " + input + " changed since the manifest was written");
  const Run run(m, out);
  const auto& c = m.command;
  if (c == "validate") return cmd_validate(run);
  if (c == "probe") return cmd_probe(run);
  if (c == "heat") return cmd_heat(run);
  if (c == "supergraph") return cmd_supergraph(run);
  if (c == "subgraph") return cmd_subgraph(run);
  if (c == "simulate") return cmd_simulate(run, threads);
  if (c == "counterexample") return cmd_counterexample(run);
  if (c == "selfcheck") return cmd_selfcheck(run);
  if (c == "export") return cmd_export(run);
  throw InputError("unknown command in manifest: " + c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet forms on weighted graphs: resolvents, heat loss, stochastic completeness"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir;
  app.add_option("-o,--out", out_dir, "output directory (default $DFG_OUTPUT_DIR or ./dfg-out)");

  RunManifest m;
  std::string input, alphas = "0.5,1,2", levels = "8:512", tgrid = "0.25,0.5,1,2,4", probes, W;
  double tol = 1e-12, eps = 1e-3, horizon = 1.0, lambda = 1.0, ratio = 0.5;
  long window = 0, replicas = 100000, cap = 1000000, instances = 200;
  int level = 16, ext_window = 64;
  Index start = 0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool single_vertex = false, explicit_copies = false, check = false, extension = false;

  auto family_cmd = [&](const std::string& name, const std::string& help) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("family", input, "family spec file, graph file or built-in name")->required();
    return sc;
  };
  auto* validate = app.add_subcommand("validate", "check a graph spec against the axioms");
  validate->add_option("spec", input, "graph JSON file")->required();

  auto* probe = family_cmd("probe", "classify a family and tabulate the equivalent conditions");
  probe->add_option("--alpha", alphas, "comma-separated α list");
  probe->add_option("--levels", levels, "a:b (doubling) or comma list");
  probe->add_option("--tol", tol, "solver tolerance");
  probe->add_option("--eps", eps, "decision threshold on w");
  probe->add_option("--probes", probes, "comma-separated vertex ids");
  probe->add_option("--tgrid", tgrid, "times for M_t");
  probe->add_option("--window", window, "certificate window (0: final level)");

  auto* heat = family_cmd("heat", "heat-loss curve M_t over the exhaustion");
  heat->add_option("--tgrid", tgrid, "comma-separated times");
  heat->add_option("--levels", levels, "a:b (doubling) or comma list");
  heat->add_option("--probes", probes, "comma-separated vertex ids");
  heat->add_option("--tol", tol, "solver tolerance");

  auto* super = family_cmd("supergraph", "attach rays to every vertex (emits a family spec)");
  super->add_flag("--single-vertex", single_vertex, "attach one pendant vertex per copy instead of a ray");
  super->add_flag("--explicit", explicit_copies, "build every copy instead of the lumped equivalent");
  super->add_flag("--check", check, "classify base and supergraph under one schedule");
  super->add_option("--levels", levels, "schedule for --check");
  super->add_option("--alpha", alphas, "comma-separated α list");

  auto* sub = family_cmd("subgraph", "Dirichlet subgraph on W (emits a spec)");
  sub->add_option("--W", W, "comma-separated vertex names (graph files)");
  sub->add_flag("--extension", extension, "run the subgraph extension scenario on this base family");
  sub->add_option("--levels", levels, "schedule for --extension");
  sub->add_option("--alpha", alphas, "comma-separated α list");
  sub->add_option("--window", ext_window, "evaluation window (base positions)");

  auto* sim = family_cmd("simulate", "Monte Carlo of the minimal jump process");
  sim->add_option("--start", start, "start vertex id");
  sim->add_option("--horizon", horizon, "time horizon T");
  sim->add_option("--replicas", replicas, "number of paths");
  sim->add_option("--cap", cap, "jump cap (explosion surrogate)");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--tgrid", tgrid, "times for the empirical M curve (empty: none)");
  sim->add_option("--threads", threads, "worker threads (does not change results)");

  auto* counter = app.add_subcommand("counterexample", "bounded-measure line with an ℓ² eigenfunction");
  counter->add_option("--lambda", lambda, "λ > 0");
  counter->add_option("--ratio", ratio, "summable weight ratio q ∈ (0,1)");

  auto* self = app.add_subcommand("selfcheck", "randomized invariant suites");
  self->add_option("--instances", instances, "instances per suite");
  self->add_option("--seed", seed, "suite seed");

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "re-run a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--threads", threads, "worker threads");

  auto* exp = family_cmd("export", "write a section operator in Matrix Market format");
  exp->add_option("--level", level, "section level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : io;
  }

  try {
    std::optional<fs::path> out;
    if (!out_dir.empty()) out = out_dir;
    if (replay->parsed()) {
      const RunManifest rm = RunManifest::from_json(read_json(manifest_path));
      return execute(rm, out, threads);
    }
    auto* sc = app.get_subcommands().front();
    m.command = sc->get_name();
    if (!input.empty()) {
      m.inputs = {input};
      m.parameters["input_digest"] = file_digest(input);
    }
    auto& p = m.parameters;
    const std::string c = m.command;
    if (c == "probe" || c == "heat" || ((c == "supergraph" || c == "subgraph") && (check || extension))) {
      p["levels"] = parse_levels(levels);
      p["tol"] = tol;
    }
    if (c == "probe" || c == "supergraph" || c == "subgraph") {
      p["alphas"] = parse_doubles(alphas);
      p["eps"] = eps;
    }
    if (c == "probe" || c == "heat") {
      std::vector<Index> ids;
      if (!probes.empty())
        for (double v : parse_doubles(probes)) ids.push_back(Index(v));
      p["probes"] = ids;
      p["tgrid"] = parse_doubles(tgrid);
    }
    if (c == "probe") p["window"] = window;
    if (c == "supergraph") p["single_vertex"] = single_vertex, p["explicit"] = explicit_copies, p["check"] = check;
    if (c == "subgraph") {
      std::vector<std::string> names;
      std::stringstream ss(W);
      for (std::string item; std::getline(ss, item, ',');) names.push_back(item);
      p["W"] = names;
      p["extension"] = extension;
      p["window"] = ext_window;
    }
    if (c == "simulate") {
      p["start"] = start, p["horizon"] = horizon, p["replicas"] = replicas, p["cap"] = cap, p["seed"] = seed;
      p["tgrid"] = sim->count("--tgrid") ? parse_doubles(tgrid) : std::vector<double>{};
    }
    if (c == "counterexample") p["lambda"] = lambda, p["ratio"] = ratio;
    if (c == "selfcheck") p["instances"] = instances, p["seed"] = sc->count("--seed") ? seed : 7;
    if (c == "export") p["level"] = level;
    m.output_dir = (out ? *out : default_output_dir()).string();
    return execute(m, out, threads);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency failure: " << e.what() << "\n";
    return consistency;
  } catch (const SolverError& e) {
    std::cerr << "solver: " << e.what() << " (residual " << e.residual << ")\n";
    return domain;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return domain;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return domain;
  }
}
