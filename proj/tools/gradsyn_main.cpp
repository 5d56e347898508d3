// gradsyn: plan synthesis routes over AND-OR reaction graphs, benchmark
// selection policies, and export graphs for inspection.
//
//   gradsyn plan --target m17 --model synthetic:seed=42 --iters 200 --out out/
//   gradsyn bench manifests/desk.json
//   gradsyn export-dot out/graph.json --out out/graph.dot

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradsyn/gradsyn.hpp"

namespace {

using namespace gradsyn;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoRoute = 2;
constexpr int kExitUsage = 64;

struct WorldHandles {
  std::shared_ptr<const ExpansionModel> model;
  std::shared_ptr<const Inventory> inventory;
};

/// --model synthetic:seed=42,branching=3,... or file:path/to/world.json
WorldHandles make_world(const std::string& spec) {
  auto colon = spec.find(':');
  std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (kind == "file") {
    if (rest.empty()) throw InvalidInputError("file model needs a path: file:PATH");
    ReactionFileWorld world = load_reaction_file(rest);
    return {world.model, world.inventory};
  }
  if (kind != "synthetic")
    throw InvalidInputError("unknown model kind '" + kind + "' (expected synthetic or file)");

  SyntheticWorldConfig config;
  std::size_t pos = 0;
  while (pos < rest.size()) {
    auto comma = rest.find(',', pos);
    std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? rest.size() : comma + 1;
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw InvalidInputError("synthetic model options must be key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    std::string value = item.substr(eq + 1);
    try {
      if (key == "seed") config.seed = std::stoull(value);
      else if (key == "branching") config.branching = std::stoi(value);
      else if (key == "max_reactants") config.max_reactants = std::stoi(value);
      else if (key == "depth" || key == "max_depth") config.max_depth = std::stoi(value);
      else if (key == "dead_end") config.dead_end_fraction = std::stod(value);
      else if (key == "share") config.share_fraction = std::stod(value);
      else if (key == "cycle") config.cycle_fraction = std::stod(value);
      else if (key == "pool") config.shared_pool = std::stoi(value);
      else if (key == "buy_base") config.buy_base = std::stod(value);
      else if (key == "buy_slope") config.buy_slope = std::stod(value);
      else if (key == "stride") config.tokens_per_depth = std::stoi(value);
      else throw InvalidInputError("unknown synthetic model option: " + key);
    } catch (const std::invalid_argument&) {
      throw InvalidInputError("bad value for synthetic model option " + key + ": " + value);
    }
  }
  config.validate();
  SyntheticWorld world(config);
  return {std::make_shared<SyntheticExpansion>(world), std::make_shared<SyntheticInventory>(world)};
}

EvalSettings::Mode parse_eval_mode(const std::string& spec, long& mc_samples) {
  if (spec == "auto") return EvalSettings::Mode::automatic;
  if (spec == "exact") return EvalSettings::Mode::exact;
  if (spec == "mc") return EvalSettings::Mode::mc;
  if (spec.rfind("mc:", 0) == 0) {
    mc_samples = std::stol(spec.substr(3));
    if (mc_samples < 1) throw InvalidInputError("mc sample count must be >= 1");
    return EvalSettings::Mode::mc;
  }
  throw InvalidInputError("unknown eval mode '" + spec + "' (expected auto, exact or mc:N)");
}

int cmd_plan(const std::string& target, const std::string& model_spec,
             const std::string& feasibility_name, const std::string& algo, double s0,
             double theta_m, double theta_r, int iters, const std::string& eval_spec,
             const std::string& out_dir, std::uint64_t seed, const std::string& exports) {
  WorldHandles world = make_world(model_spec);
  std::unique_ptr<FeasibilityModel> feasibility = make_feasibility(feasibility_name);
  std::unique_ptr<SelectionPolicy> policy = make_policy(algo);

  SearchParams params;
  params.s0 = s0;
  params.theta_m = theta_m;
  params.theta_r = theta_r;
  params.validate();

  RunConfig cfg;
  cfg.budget = iters;
  cfg.seed = seed;
  cfg.eval.mode = parse_eval_mode(eval_spec, cfg.eval.mc_samples);

  RunResult result =
      run(Molecule(target), *world.model, *feasibility, world.inventory, params, cfg, *policy);

  bool want_json = exports.find("json") != std::string::npos;
  bool want_dot = exports.find("dot") != std::string::npos;
  std::filesystem::path out(out_dir);
  if (want_json) {
    write_text_file(out / "graph.json", graph_to_json(result.graph, &params).dump(2) + "\n");
    write_text_file(out / "routes.json", routes_to_json(result.graph, result.routes).dump(2) + "\n");
    write_text_file(out / "run.json", stats_to_json(result.stats).dump(2) + "\n");
    EvalReport report;
    report.method = result.stats.eval_method;
    report.value = result.stats.final_ssp;
    report.std_error = result.stats.final_ssp_std_error;
    report.n = result.stats.eval_samples;
    report.reactions_enumerated = result.graph.reaction_count();
    write_text_file(out / "eval.json", eval_report_to_json(report).dump(2) + "\n");
  }
  if (want_dot) write_text_file(out / "graph.dot", graph_to_dot(result.graph));

  std::cout << "policy=" << result.stats.policy << " iterations=" << result.stats.iterations
            << " molecules=" << result.stats.molecule_count
            << " reactions=" << result.stats.reaction_count
            << " routes=" << result.stats.routes_found << " ssp=" << result.stats.final_ssp
            << " (" << result.stats.eval_method << ")\n";
  return result.stats.routes_found > 0 ? kExitOk : kExitNoRoute;
}

int cmd_bench(const std::string& manifest_path, const std::string& out_override, int threads) {
  Json j;
  try {
    j = Json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(manifest_path) + ": " + e.what());
  }
  BenchmarkManifest manifest = manifest_from_json(j);
  if (threads > 0) manifest.threads = threads;
  std::filesystem::path out = out_override.empty() ? manifest.output_dir : out_override;
  BenchResults results = run_benchmark(manifest, out);

  int failures = 0;
  for (const RunRecord& record : results.records)
    if (record.failed) {
      ++failures;
      std::cerr << "run failed: instance " << record.instance << " policy " << record.policy
                << " s0 " << record.s0 << ": " << record.error << "\n";
    }
  std::cout << aggregate_csv(results.rows);
  std::cout << "wrote " << (out / "aggregate.csv").string() << " (" << results.records.size()
            << " runs, " << failures << " failed)\n";
  return kExitOk;
}

int cmd_export_dot(const std::string& graph_path, std::string out_path) {
  Json j;
  try {
    j = Json::parse(read_text_file(graph_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(graph_path) + ": " + e.what());
  }
  SearchGraph g = graph_from_json(j);
  if (out_path.empty())
    out_path = std::filesystem::path(graph_path).replace_extension(".dot").string();
  write_text_file(out_path, graph_to_dot(g));
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-guided synthesis planning over AND-OR reaction graphs"};
  app.require_subcommand(1);

  // plan
  auto* plan = app.add_subcommand("plan", "run one planning search");
  std::string target, model_spec;
  std::string feasibility = "constant";
  std::string algo = "gradient";
  double s0 = 0.05, theta_m = 1.0, theta_r = 1.0;
  int iters = 100;
  std::string eval_spec = "auto";
  std::string out_dir = "plan_out";
  std::uint64_t seed = 0;
  std::string exports = "json,dot";
  plan->add_option("--target", target, "target molecule (canonical string)")->required();
  plan->add_option("--model", model_spec, "synthetic:seed=N[,key=val...] or file:PATH")->required();
  plan->add_option("--feasibility", feasibility, "constant | rank | score");
  plan->add_option("--algo", algo, "gradient | retrostar | naive | topo");
  plan->add_option("--s0", s0, "default success probability of open nodes");
  plan->add_option("--theta-m", theta_m, "molecule coefficient, (0,1]");
  plan->add_option("--theta-r", theta_r, "reaction coefficient, >= 1");
  plan->add_option("--iters", iters, "iteration budget");
  plan->add_option("--eval", eval_spec, "auto | exact | mc:N");
  plan->add_option("--out", out_dir, "output directory");
  plan->add_option("--seed", seed, "seed for the Monte-Carlo evaluation");
  plan->add_option("--export", exports, "comma list of json,dot");

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark manifest");
  std::string manifest_path, bench_out;
  int threads = 0;
  bench->add_option("manifest", manifest_path, "manifest JSON path")->required();
  bench->add_option("--out", bench_out, "override the manifest's output directory");
  bench->add_option("--threads", threads, "worker threads (0 = hardware)");

  // export-dot
  auto* export_dot = app.add_subcommand("export-dot", "render a graph JSON file as DOT");
  std::string graph_path, dot_out;
  export_dot->add_option("graph", graph_path, "graph JSON path")->required();
  export_dot->add_option("--out", dot_out, "output DOT path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (plan->parsed())
      return cmd_plan(target, model_spec, feasibility, algo, s0, theta_m, theta_r, iters,
                      eval_spec, out_dir, seed, exports);
    if (bench->parsed()) return cmd_bench(manifest_path, bench_out, threads);
    if (export_dot->parsed()) return cmd_export_dot(graph_path, dot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
