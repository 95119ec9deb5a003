#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "tlsynth/bench.hpp"
#include "tlsynth/oracle.hpp"

using namespace tlsynth;

namespace {

const char* reach_doc = R"(
states: q1 q2 q3
initial: q1
deterministic: q2 q3
accepting: F1 = {q2}
q1 -- !u & !t --> q1
q1 -- t --> q2
q1 -- u --> q3
q2 -- t --> q2
q3 -- u --> q3
)";

}  // namespace

TEST_CASE("a hand-rolled trace pins the discounted reward", "[bench]") {
  const Ldba aut = parse_ldba(reach_doc);
  // six neutral cells with the target in cell 4; entering it on the fourth
  // transition collects the single positive reward at discount gamma^3
  std::vector<Label> labels(6);
  labels[4] = {"t"};
  const ChainEnv env(6, std::move(labels));

  Policy policy;
  policy.act = [](const ProductState& state, Rng&) {
    // drive right while searching; stepping off the target afterwards kills
    // the run in the sink, so exactly one reward is collected
    return ProductAction::base_action(state.q == 1 ? 0 : 1);
  };

  RewardParams params(1.0, 0.05, false, 1);
  EvalConfig cfg;
  cfg.trials = 10;
  cfg.step_cap = 30;
  cfg.gamma = 0.9;
  cfg.initial = InitialState::fixed({0.5});
  const EvalResult res = evaluate_policy(policy, env, aut, params, cfg, 5);
  REQUIRE(res.success_rate == 1.0);
  REQUIRE_THAT(res.mean_discounted_reward,
               Catch::Matchers::WithinAbs(0.729, 1e-12));
}

TEST_CASE("a policy charging into the trap scores zero", "[bench]") {
  const Ldba aut = parse_ldba(reach_doc);
  std::vector<Label> labels(6);
  labels[0] = {"u"};
  labels[5] = {"t"};
  const ChainEnv env(6, std::move(labels));

  Policy policy;
  policy.act = [](const ProductState&, Rng&) {
    return ProductAction::base_action(0);  // always left
  };
  RewardParams params(1.0, 0.05, false, 1);
  EvalConfig cfg;
  cfg.trials = 10;
  cfg.step_cap = 30;
  cfg.gamma = 0.9;
  cfg.initial = InitialState::fixed({3.5});
  const EvalResult res = evaluate_policy(policy, env, aut, params, cfg, 6);
  REQUIRE(res.success_rate == 0.0);
  REQUIRE(res.mean_discounted_reward == 0.0);
}

TEST_CASE("the success predicate agrees with the trace checker", "[bench]") {
  const Ldba aut = parse_ldba(reach_doc);
  std::vector<Label> labels(8);
  labels[0] = {"u"};
  labels[7] = {"t"};
  const ChainEnv env(8, std::move(labels));

  // a random-walk policy produces a mix of satisfying, trapped and
  // timed-out rollouts
  Policy policy;
  policy.act = [](const ProductState&, Rng& rng) {
    return ProductAction::base_action(static_cast<int>(rng.index(3)));
  };
  RewardParams tmpl(1.0, 0.05, false, 2);

  int successes = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    RewardParams params(1.0, 0.05, false, mix_seed(seed, 0));
    Rng env_rng(mix_seed(seed, 1));
    Rng policy_rng(mix_seed(seed, 2));
    Rng init_rng(mix_seed(seed, 3));
    RolloutOptions opt;
    opt.step_cap = 25;
    opt.record_path = true;
    const RolloutResult res =
        rollout(policy, env, aut, params, InitialState::fixed({4.5}), opt,
                env_rng, policy_rng, init_rng);
    const TraceReport replay = check_trace(aut, res.labels);
    REQUIRE((replay.frontier_resets >= 1) == res.success);
    if (res.success) ++successes;
  }
  REQUIRE(successes > 0);
  REQUIRE(successes < 60);
}

TEST_CASE("run configurations load, validate and round-trip", "[bench]") {
  const char* good = R"({
    "label": "vq fine",
    "map": "assets/coprates.map",
    "automaton": "assets/coprates.ldba",
    "algorithm": "vq",
    "seed": 9,
    "params": {"delta": 0.4, "episodes": 50, "episode_cap": 40, "noisy": false},
    "eval": {"trials": 10, "step_cap": 100, "initial": [194.0, 74.0]}
  })";
  const RunConfig cfg = RunConfig::from_json(nlohmann::json::parse(good));
  REQUIRE(cfg.algorithm == Algorithm::vq);
  REQUIRE(cfg.vq.delta == 0.4);
  REQUIRE(cfg.seed == 9);
  REQUIRE(cfg.initial.mode == InitialState::Mode::fixed);

  // round-trip through json preserves the interesting fields
  const RunConfig again = RunConfig::from_json(cfg.to_json());
  REQUIRE(again.label == cfg.label);
  REQUIRE(again.vq.delta == cfg.vq.delta);
  REQUIRE(again.trials == cfg.trials);
  REQUIRE(again.initial.coords == cfg.initial.coords);

  // missing files are a configuration error
  auto broken = nlohmann::json::parse(good);
  broken["map"] = "assets/missing.map";
  REQUIRE_THROWS_AS(RunConfig::from_json(broken), ConfigError);

  auto bad_alg = nlohmann::json::parse(good);
  bad_alg["algorithm"] = "sarsa";
  REQUIRE_THROWS_AS(RunConfig::from_json(bad_alg), ConfigError);
}

TEST_CASE("benchmark reports round-trip and format failed rows", "[bench]") {
  BenchReport report;
  report.repetitions = 3;
  BenchRow ok;
  ok.label = "fvi";
  ok.algorithm = "fvi";
  ok.map = "assets/coprates.map";
  ok.trained = true;
  ok.succeeded = true;
  ok.sample_complexity = 25000;
  ok.expected_reward = 0.0717;
  ok.success_rate = 0.97;
  ok.training_seconds = 2.16;
  ok.iterations = 80;
  ok.iteration_unit = "sweeps";
  ok.note = "sample complexity = k * Z * |A| * (|Q| - accepting states)";
  report.rows.push_back(ok);
  BenchRow failed;
  failed.label = "vq coarse";
  failed.algorithm = "vq";
  failed.map = "assets/coprates.map";
  failed.trained = true;
  failed.succeeded = false;
  failed.success_rate = 0.0;
  failed.sample_complexity = 123456;  // must not be reported
  report.rows.push_back(failed);

  const BenchReport loaded =
      bench_report_from_json(bench_report_to_json(report));
  REQUIRE(loaded.rows.size() == 2);
  REQUIRE(loaded.rows[0].sample_complexity == 25000);
  REQUIRE(loaded.rows[0].success_rate == 0.97);
  REQUIRE(loaded.rows[0].note == ok.note);
  // the failed row's absent fields read back as zero
  REQUIRE(loaded.rows[1].sample_complexity == 0);
  REQUIRE(loaded.rows[1].training_seconds == 0.0);

  const std::string table = bench_report_table(report);
  REQUIRE(table.find("fvi") != std::string::npos);
  // failed rows print dashes instead of numbers
  REQUIRE(table.find(" - ") != std::string::npos);
  REQUIRE(table.find("123456") == std::string::npos);
}

TEST_CASE("train, snapshot, reload and evaluate a tiny run", "[bench]") {
  // miniature rover problem so the whole train->save->load->evaluate loop
  // stays fast
  const char* map_doc = R"({
    "width": 30.0, "height": 30.0,
    "default_label": [],
    "regions": [
      {"shape": "circle", "center": [22.0, 22.0], "diameter": 10.0, "label": ["t"]}
    ]
  })";
  const std::string map_path = "build/test_mini.map";
  {
    std::ofstream out(map_path);
    out << map_doc;
  }

  nlohmann::json j{
      {"label", "mini vq"},
      {"map", map_path},
      {"automaton", "assets/coprates.ldba"},
      {"algorithm", "vq"},
      {"seed", 11},
      {"params",
       {{"delta", 1.0}, {"episodes", 800}, {"episode_cap", 250}, {"noisy", false}}},
      {"eval", {{"trials", 25}, {"step_cap", 400}, {"initial", {10.0, 10.0}}}}};
  const RunConfig cfg = RunConfig::from_json(j);
  const TrainedRun run = train_run(cfg);
  const EvalResult direct = evaluate_run(run);
  REQUIRE(direct.success_rate > 0.8);

  const std::string dir = "build/test_run_snapshot";
  save_run(run, dir);
  const TrainedRun loaded = load_run(dir);
  const EvalResult reloaded = evaluate_run(loaded);
  REQUIRE(reloaded.success_rate == direct.success_rate);
  REQUIRE(reloaded.mean_discounted_reward == direct.mean_discounted_reward);

  std::filesystem::remove_all(dir);
  std::remove(map_path.c_str());
}

TEST_CASE("export_path writes a replayable rollout", "[bench]") {
  const Ldba aut = parse_ldba(reach_doc);
  std::vector<Label> labels(6);
  labels[4] = {"t"};
  const ChainEnv env(6, std::move(labels));
  Policy policy;
  policy.act = [](const ProductState&, Rng&) {
    return ProductAction::base_action(1);
  };
  RewardParams params(1.0, 0.05, false, 3);

  const std::string file = "build/test_path.txt";
  const RolloutResult res = export_path(policy, env, aut, params,
                                        InitialState::fixed({0.5}), 20, 0.9,
                                        99, file);
  REQUIRE(res.success);
  std::ifstream in(file);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  REQUIRE(header.find("step") != std::string::npos);
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == res.steps + 1);
  std::remove(file.c_str());

  SECTION("zero step cap exports only the initial state") {
    const RolloutResult none = export_path(policy, env, aut, params,
                                           InitialState::fixed({0.5}), 0, 0.9,
                                           99, file);
    REQUIRE(none.steps == 0);
    REQUIRE_FALSE(none.success);
    std::ifstream in2(file);
    std::string l;
    int count = 0;
    while (std::getline(in2, l))
      if (!l.empty()) ++count;
    REQUIRE(count == 2);  // header plus the initial state
    std::remove(file.c_str());
  }
}
