#pragma once

// Benchmark harness: a manifest fully determines the suite (targets are the
// first N solvable, unpurchasable depth-0 tokens of the synthetic world),
// the grid (instances x policies x s0 values) and every byte of the data
// outputs. Runs are parallelized across instances; results land in
// preallocated slots so the aggregate is independent of scheduling.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gradsyn/baselines.hpp"
#include "gradsyn/models.hpp"
#include "gradsyn/planner.hpp"
#include "gradsyn/reaction_file.hpp"
#include "gradsyn/serialize.hpp"

namespace gradsyn {

struct BenchmarkManifest {
  std::uint64_t suite_seed = 42;
  int instances = 50;
  SyntheticWorldConfig world;  ///< world.seed is overridden by suite_seed
  std::vector<std::string> policies{"gradient", "retrostar", "naive", "topo"};
  std::vector<double> s0_grid{0.05};
  std::string feasibility = "constant";
  int iterations = 200;
  SearchParams params;  ///< s0 is overridden per grid point
  int exact_guard = kDefaultExactGuard;
  long mc_samples = 10000;
  int max_routes = 64;
  int threads = 0;  ///< 0: hardware concurrency
  std::string output_dir = "bench_out";

  void validate() const {
    if (instances < 1) throw InvalidInputError("instances must be >= 1");
    if (iterations < 0) throw InvalidInputError("iterations must be >= 0");
    if (policies.empty()) throw InvalidInputError("at least one policy is required");
    if (s0_grid.empty()) throw InvalidInputError("at least one s0 value is required");
    world.validate();
    params.validate();
  }
};

inline Json world_config_to_json(const SyntheticWorldConfig& w) {
  return Json{{"seed", w.seed},
              {"branching", w.branching},
              {"max_reactants", w.max_reactants},
              {"max_depth", w.max_depth},
              {"dead_end_fraction", w.dead_end_fraction},
              {"share_fraction", w.share_fraction},
              {"cycle_fraction", w.cycle_fraction},
              {"shared_pool", w.shared_pool},
              {"buy_base", w.buy_base},
              {"buy_slope", w.buy_slope},
              {"tokens_per_depth", w.tokens_per_depth}};
}

inline SyntheticWorldConfig world_config_from_json(const Json& j) {
  SyntheticWorldConfig w;
  w.seed = j.value("seed", w.seed);
  w.branching = j.value("branching", w.branching);
  w.max_reactants = j.value("max_reactants", w.max_reactants);
  w.max_depth = j.value("max_depth", w.max_depth);
  w.dead_end_fraction = j.value("dead_end_fraction", w.dead_end_fraction);
  w.share_fraction = j.value("share_fraction", w.share_fraction);
  w.cycle_fraction = j.value("cycle_fraction", w.cycle_fraction);
  w.shared_pool = j.value("shared_pool", w.shared_pool);
  w.buy_base = j.value("buy_base", w.buy_base);
  w.buy_slope = j.value("buy_slope", w.buy_slope);
  w.tokens_per_depth = j.value("tokens_per_depth", w.tokens_per_depth);
  return w;
}

inline Json manifest_to_json(const BenchmarkManifest& m) {
  return Json{{"suite_seed", m.suite_seed},
              {"instances", m.instances},
              {"world", world_config_to_json(m.world)},
              {"policies", m.policies},
              {"s0_grid", m.s0_grid},
              {"feasibility", m.feasibility},
              {"iterations", m.iterations},
              {"params", params_to_json(m.params)},
              {"exact_guard", m.exact_guard},
              {"mc_samples", m.mc_samples},
              {"max_routes", m.max_routes},
              {"threads", m.threads},
              {"output_dir", m.output_dir}};
}

inline BenchmarkManifest manifest_from_json(const Json& j) {
  BenchmarkManifest m;
  m.suite_seed = j.value("suite_seed", m.suite_seed);
  m.instances = j.value("instances", m.instances);
  if (j.contains("world")) m.world = world_config_from_json(j["world"]);
  if (j.contains("policies")) m.policies = j["policies"].get<std::vector<std::string>>();
  if (j.contains("s0_grid")) m.s0_grid = j["s0_grid"].get<std::vector<double>>();
  m.feasibility = j.value("feasibility", m.feasibility);
  m.iterations = j.value("iterations", m.iterations);
  if (j.contains("params")) m.params = params_from_json(j["params"]);
  m.exact_guard = j.value("exact_guard", m.exact_guard);
  m.mc_samples = j.value("mc_samples", m.mc_samples);
  m.max_routes = j.value("max_routes", m.max_routes);
  m.threads = j.value("threads", m.threads);
  m.output_dir = j.value("output_dir", m.output_dir);
  m.validate();
  return m;
}

/// First `count` depth-0 tokens that are unpurchasable and provably solvable
/// (exhaustive closure under the world, every reaction assumed feasible).
inline std::vector<Molecule> make_suite(const SyntheticWorldConfig& config, int count) {
  SyntheticWorld world(config);
  SyntheticExpansion expansion(world);
  SyntheticInventory inventory(world);
  std::vector<Molecule> targets;
  for (int index = 0; index < config.tokens_per_depth && static_cast<int>(targets.size()) < count;
       ++index) {
    Molecule candidate = world.token(0, index);
    if (world.purchasable_token(candidate)) continue;
    WorldSlice slice = enumerate_world(expansion, inventory, candidate);
    if (slice_solvable(slice, candidate.canonical)) targets.push_back(candidate);
  }
  if (static_cast<int>(targets.size()) < count)
    throw Error("world does not contain enough solvable targets for the requested suite");
  return targets;
}

struct RunRecord {
  int instance = 0;
  std::string target;
  std::string policy;
  double s0 = 0.0;
  bool failed = false;
  std::string error;
  RunStats stats;
};

struct BenchRow {
  std::string policy;
  double s0 = 0.0;
  std::string feasibility;
  double mean_ssp = 0.0;
  double std_error = 0.0;
  double mean_time_per_iter_s = 0.0;
  int runs = 0;
};

struct BenchResults {
  std::vector<Molecule> targets;
  std::vector<RunRecord> records;  ///< instance-major, then policy, then s0
  std::vector<BenchRow> rows;      ///< policy-major, then s0
};

namespace detail {

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (threads > n) threads = n;
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

/// CSV with one row per (policy, s0) cell: algorithm, s0, feasibility,
/// mean SSP, its standard error, and mean wall time per iteration (the only
/// timing column, kept last so determinism checks can cut it off).
inline std::string aggregate_csv(const std::vector<BenchRow>& rows) {
  std::string out = "algorithm,s0,feasibility,mean_ssp,std_error,mean_time_per_iter_s\n";
  for (const BenchRow& row : rows) {
    out += row.policy;
    out += ",";
    out += detail::format_number(row.s0);
    out += ",";
    out += row.feasibility;
    out += ",";
    out += detail::format_number(row.mean_ssp);
    out += ",";
    out += detail::format_number(row.std_error);
    out += ",";
    out += detail::format_number(row.mean_time_per_iter_s);
    out += "\n";
  }
  return out;
}

/// Runs the whole grid. Data outputs are a pure function of the manifest;
/// only the timing fields vary between runs. Per-run failures are recorded
/// in their row and do not abort the harness.
inline BenchResults run_benchmark(const BenchmarkManifest& manifest,
                                  const std::filesystem::path& out_dir) {
  manifest.validate();
  SyntheticWorldConfig world_config = manifest.world;
  world_config.seed = manifest.suite_seed;

  BenchResults results;
  results.targets = make_suite(world_config, manifest.instances);

  SyntheticWorld world(world_config);
  auto inventory = std::make_shared<SyntheticInventory>(world);
  SyntheticExpansion expansion(world);
  std::unique_ptr<FeasibilityModel> feasibility = make_feasibility(manifest.feasibility);

  const int cells_per_instance =
      static_cast<int>(manifest.policies.size() * manifest.s0_grid.size());
  results.records.resize(static_cast<std::size_t>(manifest.instances) * cells_per_instance);

  detail::parallel_for(manifest.instances, manifest.threads, [&](int instance) {
    for (std::size_t pi = 0; pi < manifest.policies.size(); ++pi) {
      for (std::size_t si = 0; si < manifest.s0_grid.size(); ++si) {
        std::size_t slot = static_cast<std::size_t>(instance) * cells_per_instance +
                           pi * manifest.s0_grid.size() + si;
        RunRecord& record = results.records[slot];
        record.instance = instance;
        record.target = results.targets[static_cast<std::size_t>(instance)].canonical;
        record.policy = manifest.policies[pi];
        record.s0 = manifest.s0_grid[si];
        try {
          SearchParams params = manifest.params;
          params.s0 = manifest.s0_grid[si];
          RunConfig cfg;
          cfg.budget = manifest.iterations;
          cfg.max_routes = manifest.max_routes;
          cfg.eval.exact_guard = manifest.exact_guard;
          cfg.eval.mc_samples = manifest.mc_samples;
          cfg.seed = detail::mix(manifest.suite_seed,
                                 detail::mix(static_cast<std::uint64_t>(instance),
                                             detail::mix(pi, si)));
          std::unique_ptr<SelectionPolicy> policy = make_policy(manifest.policies[pi]);
          RunResult run_result =
              run(results.targets[static_cast<std::size_t>(instance)], expansion, *feasibility,
                  inventory, params, cfg, *policy);
          record.stats = std::move(run_result.stats);
        } catch (const std::exception& e) {
          record.failed = true;
          record.error = e.what();
        }
      }
    }
  });

  // aggregate rows in fixed (policy, s0) order
  for (std::size_t pi = 0; pi < manifest.policies.size(); ++pi) {
    for (std::size_t si = 0; si < manifest.s0_grid.size(); ++si) {
      BenchRow row;
      row.policy = manifest.policies[pi];
      row.s0 = manifest.s0_grid[si];
      row.feasibility = manifest.feasibility;
      double sum = 0.0;
      double sum_sq = 0.0;
      double time_sum = 0.0;
      int n = 0;
      for (int instance = 0; instance < manifest.instances; ++instance) {
        const RunRecord& record =
            results.records[static_cast<std::size_t>(instance) * cells_per_instance +
                            pi * manifest.s0_grid.size() + si];
        if (record.failed) continue;
        sum += record.stats.final_ssp;
        sum_sq += record.stats.final_ssp * record.stats.final_ssp;
        time_sum += record.stats.wall_time_per_iter_s;
        ++n;
      }
      row.runs = n;
      if (n > 0) {
        row.mean_ssp = sum / n;
        row.mean_time_per_iter_s = time_sum / n;
        if (n > 1) {
          double var = (sum_sq - sum * sum / n) / (n - 1);
          if (var < 0.0) var = 0.0;
          row.std_error = std::sqrt(var / n);
        }
      }
      results.rows.push_back(std::move(row));
    }
  }

  // write outputs
  std::filesystem::create_directories(out_dir);
  Json suite{{"manifest", manifest_to_json(manifest)}, {"targets", Json::array()}};
  for (const Molecule& t : results.targets) suite["targets"].push_back(t.canonical);
  write_text_file(out_dir / "suite.json", suite.dump(2) + "\n");
  for (const RunRecord& record : results.records) {
    Json j{{"instance", record.instance},
           {"target", record.target},
           {"policy", record.policy},
           {"s0", record.s0},
           {"failed", record.failed}};
    if (record.failed)
      j["error"] = record.error;
    else
      j["stats"] = stats_to_json(record.stats);
    char name[128];
    std::snprintf(name, sizeof(name), "run_i%03d_%s_s0_%s.json", record.instance,
                  record.policy.c_str(), detail::format_number(record.s0).c_str());
    write_text_file(out_dir / "runs" / name, j.dump(2) + "\n");
  }
  write_text_file(out_dir / "aggregate.csv", aggregate_csv(results.rows));
  return results;
}

}  // namespace gradsyn
