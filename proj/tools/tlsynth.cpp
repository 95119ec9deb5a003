// tlsynth -- train, evaluate and benchmark LTL-constrained policy
// synthesizers for the planar rover environment.
//
// Subcommands: train, evaluate, bench, export-path, validate-assets.
// Configuration comes from a JSON run file (see assets/ for examples);
// flags override selected fields, and TLSYNTH_SEED overrides every seed.
// Exit codes: 0 success, 2 configuration error, 3 training failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tlsynth/bench.hpp"
#include "tlsynth/evaluate.hpp"

using namespace tlsynth;

namespace {

struct SeedOverride {
  bool present = false;
  std::uint64_t value = 0;
};

SeedOverride env_seed() {
  SeedOverride s;
  if (const char* raw = std::getenv("TLSYNTH_SEED")) {
    s.present = true;
    s.value = std::strtoull(raw, nullptr, 10);
  }
  return s;
}

RunConfig load_config(const std::string& path, const SeedOverride& seed,
                      const std::string& algorithm_override) {
  RunConfig cfg = RunConfig::load(path);
  if (!algorithm_override.empty()) {
    cfg.algorithm = algorithm_from_string(algorithm_override);
    cfg.label = algorithm_override;
  }
  if (seed.present) cfg.seed = seed.value;
  return cfg;
}

int cmd_validate(const std::vector<std::string>& files) {
  bool all_ok = true;
  for (const std::string& f : files) {
    try {
      if (f.size() >= 5 && f.substr(f.size() - 5) == ".ldba") {
        const Ldba aut = load_ldba(f);
        std::cout << f << ": ok (" << aut.size() << " states, "
                  << aut.accepting_sets.size() << " accepting set(s), "
                  << aut.edges.size() << " edges)\n";
      } else if (f.size() >= 4 && f.substr(f.size() - 4) == ".map") {
        const LabelledMap map = LabelledMap::load(f);
        std::cout << f << ": ok (" << map.width() << " x " << map.height()
                  << " km, " << map.regions().size() << " regions)\n";
      } else {
        std::cout << f << ": skipped (not .ldba or .map)\n";
      }
    } catch (const std::exception& e) {
      std::cout << f << ": INVALID - " << e.what() << "\n";
      all_ok = false;
    }
  }
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LTL-constrained policy synthesis on continuous-state MDPs"};
  app.require_subcommand(1);
  const SeedOverride seed = env_seed();

  std::string config_path, out_dir = "out", snapshot_dir, out_file,
              algorithm_override;
  std::uint64_t path_seed = 1;
  int repetitions = 1;
  std::vector<std::string> asset_files;

  auto* train = app.add_subcommand("train", "train one synthesizer");
  train->add_option("--config", config_path, "run configuration (json)")
      ->required();
  train->add_option("--algorithm", algorithm_override,
                    "override the configured algorithm (lcnfq|vq|fvi)");
  train->add_option("--out", out_dir, "snapshot output directory");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained policy");
  evaluate->add_option("--snapshot", snapshot_dir, "snapshot directory")
      ->required();

  auto* bench = app.add_subcommand("bench", "run a benchmark suite");
  bench->add_option("--config", config_path,
                    "benchmark configuration (json with a runs array)")
      ->required();
  bench->add_option("--out", out_dir, "report output directory");
  bench->add_option("--repetitions", repetitions,
                    "training repetitions for time averaging");

  auto* export_cmd =
      app.add_subcommand("export-path", "roll out a policy and export it");
  export_cmd->add_option("--snapshot", snapshot_dir, "snapshot directory")
      ->required();
  export_cmd->add_option("--out", out_file, "output file")->required();
  export_cmd->add_option("--seed", path_seed, "rollout seed");

  auto* validate =
      app.add_subcommand("validate-assets", "check automaton and map files");
  validate->add_option("files", asset_files, "files to validate")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) {
      const RunConfig cfg = load_config(config_path, seed, algorithm_override);
      std::cout << "training " << cfg.label << " on " << cfg.map_path << "\n";
      const auto t0 = std::chrono::steady_clock::now();
      const TrainedRun run = train_run(cfg);
      const auto t1 = std::chrono::steady_clock::now();
      save_run(run, out_dir);
      const EvalResult eval = evaluate_run(run);
      std::cout << "trained in "
                << std::chrono::duration<double>(t1 - t0).count()
                << " s, samples " << run.sample_complexity << ", "
                << run.iterations << " " << run.iteration_unit
                << "\nsuccess rate " << 100.0 * eval.success_rate
                << "%, expected discounted reward "
                << eval.mean_discounted_reward << "\nsnapshot written to "
                << out_dir << "\n";
      return 0;
    }

    if (app.got_subcommand(evaluate)) {
      TrainedRun run = load_run(snapshot_dir);
      if (seed.present) run.config.seed = seed.value;
      const EvalResult eval = evaluate_run(run);
      std::cout << "trials " << run.config.trials << "\nsuccess rate "
                << 100.0 * eval.success_rate
                << "%\nexpected discounted reward "
                << eval.mean_discounted_reward << "\n";
      return 0;
    }

    if (app.got_subcommand(bench)) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file: " + config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_path + std::string(": ") + e.what());
      }
      std::vector<RunConfig> configs;
      for (const auto& run : j.at("runs")) {
        RunConfig cfg = RunConfig::from_json(run);
        if (seed.present) cfg.seed = seed.value;
        configs.push_back(std::move(cfg));
      }
      if (j.contains("repetitions") && repetitions == 1)
        repetitions = j.at("repetitions").get<int>();
      const BenchReport report = run_benchmark(configs, repetitions);
      std::filesystem::create_directories(out_dir);
      const std::string json_path =
          (std::filesystem::path(out_dir) / "report.json").string();
      const std::string table_path =
          (std::filesystem::path(out_dir) / "report.txt").string();
      write_bench_report(report, json_path, table_path);
      std::cout << bench_report_table(report) << "report written to "
                << json_path << "\n";
      for (const BenchRow& row : report.rows)
        if (!row.error.empty()) return 3;
      return 0;
    }

    if (app.got_subcommand(export_cmd)) {
      const TrainedRun run = load_run(snapshot_dir);
      const RunConfig& cfg = run.config;
      const RewardParams reward_template(cfg.positive_base, cfg.noise_scale,
                                         cfg.noisy, cfg.seed);
      const int cap = cfg.step_cap > 0
                          ? cfg.step_cap
                          : default_step_cap(*run.env, cfg.max_step);
      const Policy policy = run.policy();
      const RolloutResult res =
          export_path(policy, *run.env, *run.automaton, reward_template,
                      cfg.initial, cap, cfg.gamma,
                      seed.present ? seed.value : path_seed, out_file);
      std::cout << (res.success ? "satisfying" : "non-satisfying")
                << " rollout of " << res.steps << " steps written to "
                << out_file << "\n";
      return 0;
    }

    if (app.got_subcommand(validate)) return cmd_validate(asset_files);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
