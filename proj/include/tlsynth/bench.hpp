/* bench.hpp -- run configuration, training dispatch and benchmark tables.
 *
 * A run configuration names a map, an automaton, one of the three
 * synthesizers and its hyperparameters.  The benchmark driver trains each
 * configured run (repeating to average wall-clock training time), then
 * evaluates the resulting policy over seeded rollouts and emits a
 * machine-readable report plus an aligned text table.  Iteration counts
 * are reported in each algorithm's native unit (training cycles, episodes
 * or sweeps).
 */
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlsynth/automata.hpp"
#include "tlsynth/environment.hpp"
#include "tlsynth/evaluate.hpp"
#include "tlsynth/fvi.hpp"
#include "tlsynth/lcnfq.hpp"
#include "tlsynth/oracle.hpp"
#include "tlsynth/product.hpp"
#include "tlsynth/vq.hpp"

namespace tlsynth {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Algorithm { lcnfq, vq, fvi };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lcnfq: return "lcnfq";
    case Algorithm::vq: return "vq";
    case Algorithm::fvi: return "fvi";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "lcnfq") return Algorithm::lcnfq;
  if (s == "vq") return Algorithm::vq;
  if (s == "fvi") return Algorithm::fvi;
  throw ConfigError("unknown algorithm: " + s);
}

struct RunConfig {
  std::string label;
  std::string map_path;
  std::string automaton_path;
  Algorithm algorithm = Algorithm::lcnfq;
  std::uint64_t seed = 1;

  // environment and reward
  double max_step = 2.0;       // D
  double stay_radius = 0.02;   // d
  double gamma = 0.9;
  double positive_base = 1.0;  // M
  double noise_scale = 0.05;   // m
  bool noisy = false;          // y

  // lcnfq
  std::size_t budget = 7000;
  int reset_horizon = 0;  // 0: derive from the map (two crossings)
  LcnfqConfig lcnfq;

  // vq
  VqConfig vq;

  // fvi
  FviConfig fvi;

  // evaluation
  int trials = 100;
  int step_cap = 0;  // 0: derive from the map (ten crossings)
  InitialState initial = InitialState::uniform();
  InitialState explore_start = InitialState::uniform();

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.map_path = j.at("map").get<std::string>();
    c.automaton_path = j.at("automaton").get<std::string>();
    c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    c.label = j.value("label", to_string(c.algorithm));
    c.seed = j.value("seed", std::uint64_t{1});

    const auto p = j.value("params", nlohmann::json::object());
    c.max_step = p.value("max_step", 2.0);
    c.stay_radius = p.value("stay_radius", 0.02);
    c.gamma = p.value("gamma", 0.9);
    c.positive_base = p.value("positive_base", 1.0);
    c.noise_scale = p.value("noise_scale", 0.05);
    // reward noise defaults to the algorithm convention: on for lcnfq,
    // off otherwise
    c.noisy = p.value("noisy", c.algorithm == Algorithm::lcnfq);

    c.budget = p.value("budget", std::size_t{7000});
    c.reset_horizon = p.value("reset_horizon", 0);
    c.lcnfq.gamma = c.gamma;
    c.lcnfq.hidden_dim = p.value("hidden", 32);
    c.lcnfq.epochs_per_cycle = p.value("epochs", 300);
    c.lcnfq.max_cycles = p.value("cycles", 40);
    c.lcnfq.patience = p.value("patience", 5);

    c.vq.delta = p.value("delta", 0.4);
    c.vq.episodes = p.value("episodes", 2000);
    c.vq.episode_cap = p.value("episode_cap", 500);
    c.vq.mu = p.value("mu", 0.9);
    c.vq.gamma = c.gamma;
    c.vq.eps_start = p.value("eps_start", 1.0);
    c.vq.eps_end = p.value("eps_end", 0.05);

    c.fvi.k = p.value("k", 100);
    c.fvi.h = p.value("h", 0.18);
    c.fvi.Z = p.value("Z", 25);
    c.fvi.sweeps = p.value("sweeps", 80);
    c.fvi.tolerance = p.value("fvi_tolerance", 1e-6);
    c.fvi.policy_samples = p.value("policy_samples", c.fvi.Z);

    const auto e = j.value("eval", nlohmann::json::object());
    c.trials = e.value("trials", 100);
    c.step_cap = e.value("step_cap", 0);
    if (e.contains("initial")) {
      c.initial = InitialState::fixed(e.at("initial").get<State>());
    }
    if (j.contains("explore") && j.at("explore").contains("initial")) {
      c.explore_start =
          InitialState::fixed(j.at("explore").at("initial").get<State>());
    } else {
      c.explore_start = c.initial;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run configuration: ") + e.what());
  }
  if (!std::filesystem::exists(c.map_path))
    throw ConfigError("map file does not exist: " + c.map_path);
  if (!std::filesystem::exists(c.automaton_path))
    throw ConfigError("automaton file does not exist: " + c.automaton_path);
  const bool expected_noise = c.algorithm == Algorithm::lcnfq;
  if (c.noisy != expected_noise)
    std::fprintf(stderr,
                 "warning: %s normally runs with reward noise %s; keeping "
                 "the configured override\n",
                 to_string(c.algorithm).c_str(), expected_noise ? "on" : "off");
  return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

inline nlohmann::json RunConfig::to_json() const {
  nlohmann::json p{{"max_step", max_step},
                   {"stay_radius", stay_radius},
                   {"gamma", gamma},
                   {"positive_base", positive_base},
                   {"noise_scale", noise_scale},
                   {"noisy", noisy},
                   {"budget", budget},
                   {"reset_horizon", reset_horizon},
                   {"hidden", lcnfq.hidden_dim},
                   {"epochs", lcnfq.epochs_per_cycle},
                   {"cycles", lcnfq.max_cycles},
                   {"patience", lcnfq.patience},
                   {"delta", vq.delta},
                   {"episodes", vq.episodes},
                   {"episode_cap", vq.episode_cap},
                   {"mu", vq.mu},
                   {"eps_start", vq.eps_start},
                   {"eps_end", vq.eps_end},
                   {"k", fvi.k},
                   {"h", fvi.h},
                   {"Z", fvi.Z},
                   {"sweeps", fvi.sweeps},
                   {"policy_samples", fvi.policy_samples}};
  nlohmann::json e{{"trials", trials}, {"step_cap", step_cap}};
  if (initial.mode == InitialState::Mode::fixed) e["initial"] = initial.coords;
  nlohmann::json j{{"label", label},
                   {"map", map_path},
                   {"automaton", automaton_path},
                   {"algorithm", to_string(algorithm)},
                   {"seed", seed},
                   {"params", p},
                   {"eval", e}};
  if (explore_start.mode == InitialState::Mode::fixed)
    j["explore"] = {{"initial", explore_start.coords}};
  return j;
}

// a trained policy with everything needed to evaluate or export it
struct TrainedRun {
  RunConfig config;
  std::shared_ptr<RoverEnv> env;
  std::shared_ptr<Ldba> automaton;
  std::shared_ptr<ProductActionSpace> space;
  std::shared_ptr<HybridQ> hybrid;
  std::shared_ptr<Quantizer> quantizer;
  std::shared_ptr<ValueTable> value_table;
  std::size_t sample_complexity = 0;
  int iterations = 0;
  std::string iteration_unit;
  std::string note;

  Policy policy() const {
    switch (config.algorithm) {
      case Algorithm::lcnfq: return greedy_policy(*hybrid, *space);
      case Algorithm::vq: return vq_policy(*quantizer, *space);
      case Algorithm::fvi:
        return fvi_policy(*value_table, *env, *automaton,
                          config.fvi.policy_samples);
    }
    throw TrainingError("unreachable");
  }
};

inline TrainedRun train_run(const RunConfig& cfg) {
  TrainedRun run;
  run.config = cfg;
  run.env = std::make_shared<RoverEnv>(
      LabelledMap::load(cfg.map_path),
      RoverDynamics(cfg.max_step, cfg.stay_radius));
  run.automaton = std::make_shared<Ldba>(load_ldba(cfg.automaton_path));
  run.space =
      std::make_shared<ProductActionSpace>(*run.automaton, run.env->actions());

  const RewardParams reward_template(cfg.positive_base, cfg.noise_scale,
                                     cfg.noisy, cfg.seed);
  const int step_cap = cfg.step_cap > 0
                           ? cfg.step_cap
                           : default_step_cap(*run.env, cfg.max_step);
  try {
    switch (cfg.algorithm) {
      case Algorithm::lcnfq: {
        RewardParams gather_params(cfg.positive_base, cfg.noise_scale,
                                   cfg.noisy, mix_seed(cfg.seed, 11));
        const int th = cfg.reset_horizon > 0
                           ? cfg.reset_horizon
                           : default_reset_horizon(*run.env, cfg.max_step);
        const ExperienceSet experience =
            gather_experience(*run.env, *run.automaton, gather_params,
                              {cfg.explore_start, th}, cfg.budget,
                              mix_seed(cfg.seed, 12));
        EvalConfig eval;
        eval.trials = 100;
        eval.step_cap = step_cap;
        eval.gamma = cfg.gamma;
        eval.initial = cfg.initial;
        LcnfqReport report;
        run.hybrid = std::make_shared<HybridQ>(
            lcnfq_train(*run.env, *run.automaton, experience, reward_template,
                        cfg.lcnfq, eval, mix_seed(cfg.seed, 13), &report));
        run.sample_complexity = report.sample_count;
        run.iterations = static_cast<int>(report.cycles.size());
        run.iteration_unit = "training cycles";
        break;
      }
      case Algorithm::vq: {
        VqReport report;
        run.quantizer = std::make_shared<Quantizer>(
            vq_train(*run.env, *run.automaton, reward_template, cfg.vq,
                     cfg.explore_start, mix_seed(cfg.seed, 14), &report));
        run.sample_complexity = report.sample_count;
        run.iterations = report.episodes;
        run.iteration_unit = "episodes";
        break;
      }
      case Algorithm::fvi: {
        FviReport report;
        run.value_table = std::make_shared<ValueTable>(
            fvi_train(*run.env, *run.automaton, reward_template, cfg.fvi,
                      mix_seed(cfg.seed, 15), &report));
        run.sample_complexity = report.sample_complexity;
        run.iterations = report.sweeps_run;
        run.iteration_unit = "sweeps";
        run.note = report.note;
        break;
      }
    }
  } catch (const std::exception& e) {
    throw TrainingError(std::string("training failed for ") + cfg.label +
                        ": " + e.what());
  }
  return run;
}

inline EvalResult evaluate_run(const TrainedRun& run) {
  const RunConfig& cfg = run.config;
  EvalConfig eval;
  eval.trials = cfg.trials;
  eval.step_cap = cfg.step_cap > 0
                      ? cfg.step_cap
                      : default_step_cap(*run.env, cfg.max_step);
  eval.gamma = cfg.gamma;
  eval.initial = cfg.initial;
  const RewardParams reward_template(cfg.positive_base, cfg.noise_scale,
                                     cfg.noisy, cfg.seed);
  const Policy policy = run.policy();
  return evaluate_policy(policy, *run.env, *run.automaton, reward_template,
                         eval, mix_seed(cfg.seed, 16));
}

// snapshot directory layout: config.json plus the algorithm's own files
inline void save_run(const TrainedRun& run, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "config.json");
    if (!out) throw std::runtime_error("cannot write config in " + dir);
    out << run.config.to_json().dump(2) << '\n';
  }
  switch (run.config.algorithm) {
    case Algorithm::lcnfq:
      save_hybrid_q(*run.hybrid, *run.automaton,
                    (fs::path(dir) / "networks").string());
      break;
    case Algorithm::vq:
      save_quantizer(*run.quantizer, (fs::path(dir) / "quantizer.json").string());
      break;
    case Algorithm::fvi:
      save_value_table(*run.value_table,
                       (fs::path(dir) / "value_table.json").string());
      break;
  }
}

inline TrainedRun load_run(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "config.json");
  if (!in) throw ConfigError("cannot open snapshot config in " + dir);
  nlohmann::json j;
  in >> j;
  TrainedRun run;
  run.config = RunConfig::from_json(j);
  run.env = std::make_shared<RoverEnv>(
      LabelledMap::load(run.config.map_path),
      RoverDynamics(run.config.max_step, run.config.stay_radius));
  run.automaton = std::make_shared<Ldba>(load_ldba(run.config.automaton_path));
  run.space =
      std::make_shared<ProductActionSpace>(*run.automaton, run.env->actions());
  switch (run.config.algorithm) {
    case Algorithm::lcnfq:
      run.hybrid = std::make_shared<HybridQ>(
          load_hybrid_q(*run.automaton, (fs::path(dir) / "networks").string()));
      break;
    case Algorithm::vq:
      run.quantizer = std::make_shared<Quantizer>(
          load_quantizer((fs::path(dir) / "quantizer.json").string()));
      break;
    case Algorithm::fvi:
      run.value_table = std::make_shared<ValueTable>(
          load_value_table((fs::path(dir) / "value_table.json").string()));
      break;
  }
  return run;
}

struct BenchRow {
  std::string label;
  std::string algorithm;
  std::string map;
  bool trained = false;
  bool succeeded = false;  // success rate above zero
  std::size_t sample_complexity = 0;
  double expected_reward = 0.0;
  double success_rate = 0.0;
  double training_seconds = 0.0;
  int iterations = 0;
  std::string iteration_unit;
  std::string note;
  std::string error;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  int repetitions = 1;
  std::string header =
      "iteration counts are native units per algorithm: lcnfq training "
      "cycles, vq episodes, fvi sweeps";
};

inline BenchReport run_benchmark(const std::vector<RunConfig>& configs,
                                 int repetitions = 1) {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  BenchReport report;
  report.repetitions = repetitions;
  for (const RunConfig& cfg : configs) {
    BenchRow row;
    row.label = cfg.label;
    row.algorithm = to_string(cfg.algorithm);
    row.map = cfg.map_path;
    try {
      double seconds = 0.0;
      std::optional<TrainedRun> last;
      for (int rep = 0; rep < repetitions; ++rep) {
        RunConfig rep_cfg = cfg;
        rep_cfg.seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(rep));
        if (rep == 0) rep_cfg.seed = cfg.seed;  // headline run
        const auto t0 = std::chrono::steady_clock::now();
        TrainedRun run = train_run(rep_cfg);
        const auto t1 = std::chrono::steady_clock::now();
        seconds += std::chrono::duration<double>(t1 - t0).count();
        if (rep == 0) last = std::move(run);
      }
      row.trained = true;
      row.training_seconds = seconds / repetitions;
      row.sample_complexity = last->sample_complexity;
      row.iterations = last->iterations;
      row.iteration_unit = last->iteration_unit;
      row.note = last->note;
      const EvalResult eval = evaluate_run(*last);
      row.success_rate = eval.success_rate;
      row.expected_reward = eval.mean_discounted_reward;
      row.succeeded = eval.success_rate > 0.0;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::json bench_report_to_json(const BenchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow& r : report.rows) {
    nlohmann::json j{{"label", r.label},
                     {"algorithm", r.algorithm},
                     {"map", r.map},
                     {"trained", r.trained},
                     {"success_rate", r.success_rate},
                     {"expected_reward", r.expected_reward}};
    // a row that never succeeds reports no complexity or timing, matching
    // the convention of marking failed configurations absent
    if (r.trained && r.succeeded) {
      j["sample_complexity"] = r.sample_complexity;
      j["training_seconds"] = r.training_seconds;
      j["iterations"] = r.iterations;
      j["iteration_unit"] = r.iteration_unit;
    }
    if (!r.note.empty()) j["note"] = r.note;
    if (!r.error.empty()) j["error"] = r.error;
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"header", report.header},
                        {"repetitions", report.repetitions},
                        {"rows", rows}};
}

inline BenchReport bench_report_from_json(const nlohmann::json& j) {
  BenchReport report;
  report.header = j.value("header", "");
  report.repetitions = j.value("repetitions", 1);
  for (const auto& row : j.at("rows")) {
    BenchRow r;
    r.label = row.at("label").get<std::string>();
    r.algorithm = row.at("algorithm").get<std::string>();
    r.map = row.at("map").get<std::string>();
    r.trained = row.value("trained", false);
    r.success_rate = row.value("success_rate", 0.0);
    r.expected_reward = row.value("expected_reward", 0.0);
    r.succeeded = r.success_rate > 0.0;
    r.sample_complexity = row.value("sample_complexity", std::size_t{0});
    r.training_seconds = row.value("training_seconds", 0.0);
    r.iterations = row.value("iterations", 0);
    r.iteration_unit = row.value("iteration_unit", "");
    r.note = row.value("note", "");
    r.error = row.value("error", "");
    report.rows.push_back(std::move(r));
  }
  return report;
}

inline std::string bench_report_table(const BenchReport& report) {
  std::ostringstream out;
  out << "# " << report.header << '\n';
  out << "# training time averaged over " << report.repetitions
      << " repetition(s)\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-34s %16s %12s %9s %13s %11s\n",
                "label", "map", "samples", "U(s0)", "success", "train[s]",
                "iterations");
  out << line;
  for (const BenchRow& r : report.rows) {
    if (!r.error.empty()) {
      std::snprintf(line, sizeof line, "%-18s %-34s failed: %s\n",
                    r.label.c_str(), r.map.c_str(), r.error.c_str());
      out << line;
      continue;
    }
    char samples[32] = "-", train[32] = "-", iters[32] = "-";
    if (r.succeeded) {
      std::snprintf(samples, sizeof samples, "%zu", r.sample_complexity);
      std::snprintf(train, sizeof train, "%.2f", r.training_seconds);
      std::snprintf(iters, sizeof iters, "%d", r.iterations);
    }
    std::snprintf(line, sizeof line, "%-18s %-34s %16s %12.4f %8.0f%% %13s %11s\n",
                  r.label.c_str(), r.map.c_str(), samples, r.expected_reward,
                  100.0 * r.success_rate, train, iters);
    out << line;
  }
  return out.str();
}

inline void write_bench_report(const BenchReport& report,
                               const std::string& json_path,
                               const std::string& table_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot open " + json_path);
    out << bench_report_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(table_path);
    if (!out) throw std::runtime_error("cannot open " + table_path);
    out << bench_report_table(report);
  }
}

}  // namespace tlsynth
