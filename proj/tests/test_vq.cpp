#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "tlsynth/oracle.hpp"
#include "tlsynth/vq.hpp"

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

ChainEnv reach_chain(int n) {
  std::vector<Label> labels(static_cast<std::size_t>(n));
  labels.front() = {"u"};
  labels.back() = {"t"};
  return ChainEnv(n, std::move(labels));
}

}  // namespace

TEST_CASE("quantize inserts into empty classes and respects the resolution",
          "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(8);
  const ProductActionSpace space(aut, env.actions());
  Quantizer qz = Quantizer::make(0.4, aut.size(), space.size());

  // empty class: insert with all-zero q-values
  const auto [first, inserted] = qz.quantize({{3.5}, 0});
  REQUIRE(inserted);
  REQUIRE(first.valid());
  for (std::size_t slot : space.valid_indices(0))
    REQUIRE(qz.qvalue(first, slot) == 0.0);

  // within the resolution: reuse the existing centroid
  const auto [again, inserted2] = qz.quantize({{3.8}, 0});
  REQUIRE_FALSE(inserted2);
  REQUIRE(again.idx == first.idx);

  // beyond the resolution, even with other centroids around: insert
  qz.quantize({{5.5}, 0});
  const auto [fresh, inserted3] = qz.quantize({{4.5}, 0});
  REQUIRE(inserted3);
  REQUIRE(fresh.valid());
  REQUIRE(qz.centroids[0].size() == 3);

  // classes are per automaton state
  const auto [other_class, inserted4] = qz.quantize({{3.5}, 1});
  REQUIRE(inserted4);
  REQUIRE(other_class.q == 1);
  REQUIRE_THROWS_AS(qz.quantize({{3.5}, sink_state}), std::invalid_argument);
}

TEST_CASE("ql_update applies the one-step rule", "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(8);
  const ProductActionSpace space(aut, env.actions());
  Quantizer qz = Quantizer::make(0.4, aut.size(), space.size());
  const auto c = qz.quantize({{3.5}, 0}).first;
  const auto c2 = qz.quantize({{6.5}, 0}).first;

  SECTION("full overwrite at mu = 1") {
    qz.qtable[0][static_cast<std::size_t>(c.idx)][1] = 5.0;
    qz.qtable[0][static_cast<std::size_t>(c2.idx)][0] = 2.0;  // max next = 2
    ql_update(qz, c, 1, 1.0, c2, space, 1.0, 0.9);
    REQUIRE_THAT(qz.qvalue(c, 1), Catch::Matchers::WithinAbs(2.8, 1e-12));
  }

  SECTION("convex blend at mu = 0.5") {
    ql_update(qz, c, 0, 1.0, c2, space, 0.5, 0.9);
    REQUIRE_THAT(qz.qvalue(c, 0), Catch::Matchers::WithinAbs(0.5, 1e-12));
  }

  SECTION("other entries stay untouched") {
    ql_update(qz, c, 0, 1.0, c2, space, 0.5, 0.9);
    REQUIRE(qz.qvalue(c, 1) == 0.0);
    REQUIRE(qz.qvalue(c2, 0) == 0.0);
  }

  SECTION("learning rate and centroid are validated") {
    REQUIRE_THROWS_AS(ql_update(qz, c, 0, 1.0, c2, space, 0.0, 0.9),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        ql_update(qz, Quantizer::Ref{}, 0, 1.0, c2, space, 0.5, 0.9),
        std::invalid_argument);
  }
}

TEST_CASE("q-values stay below r_max/(1-gamma) under any update sequence",
          "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(8);
  const ProductActionSpace space(aut, env.actions());
  Quantizer qz = Quantizer::make(0.9, aut.size(), space.size());
  for (AutState q = 0; q < 3; ++q)
    for (double x : {0.5, 2.5, 4.5, 6.5}) qz.quantize({{x}, q});

  Rng rng(17);
  const double bound = 1.0 / (1.0 - 0.9);
  bool bounded = true;
  for (int i = 0; i < 100000; ++i) {
    const AutState q = static_cast<AutState>(rng.index(3));
    const Quantizer::Ref c{q, static_cast<int>(rng.index(4))};
    const Quantizer::Ref c2{static_cast<AutState>(rng.index(3)),
                            static_cast<int>(rng.index(4))};
    const double r = rng.uniform01();  // r <= r_max = 1
    const double mu = 0.1 + 0.9 * rng.uniform01();
    ql_update(qz, c, rng.index(space.size()), r, c2, space, mu, 0.9);
  }
  for (AutState q = 0; q < 3; ++q)
    for (const auto& row : qz.qtable[static_cast<std::size_t>(q)])
      for (double v : row) bounded = bounded && std::abs(v) <= bound + 1e-9;
  REQUIRE(bounded);
}

TEST_CASE("vq_train counts samples and keeps centroids separated", "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(8);

  SECTION("a single capped episode records at most cap transitions") {
    VqConfig cfg;
    cfg.delta = 0.9;
    cfg.episodes = 1;
    cfg.episode_cap = 37;
    RewardParams params(1.0, 0.05, false, 1);
    VqReport report;
    vq_train(env, aut, params, cfg, InitialState::fixed({4.5}), 11, &report);
    REQUIRE(report.sample_count <= 37);
    REQUIRE(report.sample_count > 0);
    REQUIRE(report.episodes == 1);
  }

  SECTION("pairwise centroid distances exceed the resolution") {
    VqConfig cfg;
    cfg.delta = 0.9;
    cfg.episodes = 60;
    cfg.episode_cap = 50;
    RewardParams params(1.0, 0.05, false, 2);
    const Quantizer qz =
        vq_train(env, aut, params, cfg, InitialState::fixed({4.5}), 12);
    REQUIRE(qz.centroid_count() > 0);
    bool separated = true;
    for (const auto& list : qz.centroids)
      for (std::size_t i = 0; i < list.size(); ++i)
        for (std::size_t j = i + 1; j < list.size(); ++j)
          separated = separated && distance(list[i], list[j]) > cfg.delta;
    REQUIRE(separated);
  }
}

TEST_CASE("a resolution wider than the map degenerates to one centroid",
          "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  // planar world with the target off every axis through the start, so a
  // single-cell policy (one constant action) can never reach it
  std::vector<MapRegion> regions;
  MapRegion target;
  target.shape = MapRegion::Shape::circle;
  target.circle = {70.0, 70.0, 8.0};
  target.label = {"t"};
  regions.push_back(target);
  RoverEnv env(LabelledMap(100.0, 100.0, std::move(regions), {}),
               RoverDynamics(2.0, 0.02));

  VqConfig cfg;
  cfg.delta = 150.0;  // wider than the diagonal
  cfg.episodes = 120;
  cfg.episode_cap = 80;
  RewardParams params(1.0, 0.05, false, 3);
  VqReport report;
  const Quantizer qz = vq_train(env, aut, params, cfg,
                                InitialState::fixed({30.0, 40.0}), 13, &report);
  for (const auto& list : qz.centroids) REQUIRE(list.size() <= 1);

  // the collapsed table cannot express a target-seeking policy
  const ProductActionSpace space(aut, env.actions());
  const Policy policy = vq_policy(qz, space);
  EvalConfig eval;
  eval.trials = 20;
  eval.step_cap = 500;
  eval.initial = InitialState::fixed({30.0, 40.0});
  const EvalResult res = evaluate_policy(policy, env, aut, params, eval, 14);
  REQUIRE(res.success_rate == 0.0);
}

TEST_CASE("vq learns the chain and matches the oracle policy", "[vq][slow]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(8);
  VqConfig cfg;
  cfg.delta = 0.9;  // just under one cell
  cfg.episodes = 1500;
  cfg.episode_cap = 60;
  cfg.mu = 0.9;
  RewardParams params(1.0, 0.05, false, 4);
  VqReport report;
  const Quantizer qz =
      vq_train(env, aut, params, cfg, InitialState::fixed({4.5}), 15, &report);
  REQUIRE(report.centroid_count > 0);

  const ProductActionSpace space(aut, env.actions());
  const Policy policy = vq_policy(qz, space);

  const ChainProduct cp = enumerate_chain_product(env, aut, 1.0);
  const OracleSolution oracle = exact_dp_oracle(cp.mdp, 0.9);
  int agree = 0, total = 0;
  Rng rng(1);
  for (int cell = 0; cell < env.n_cells(); ++cell)
    for (AutState q = 0; q < static_cast<AutState>(aut.size()); ++q) {
      const ProductAction a = policy.act({{env.center_of(cell)}, q}, rng);
      ++total;
      if (oracle.is_optimal(cp.index(cell, q), a.base, 1e-9)) ++agree;
    }
  REQUIRE(agree >= (total * 9) / 10);

  EvalConfig eval;
  eval.trials = 1;
  eval.step_cap = 60;
  eval.initial = InitialState::fixed({4.5});
  REQUIRE(evaluate_policy(policy, env, aut, params, eval, 16).success_rate ==
          1.0);
}

TEST_CASE("vq training is reproducible under a fixed seed", "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(6);
  Quantizer runs[2];
  for (int run = 0; run < 2; ++run) {
    VqConfig cfg;
    cfg.delta = 0.9;
    cfg.episodes = 50;
    cfg.episode_cap = 40;
    RewardParams params(1.0, 0.05, false, 5);
    runs[run] = vq_train(env, aut, params, cfg, InitialState::fixed({3.5}), 17);
  }
  REQUIRE(runs[0].centroids == runs[1].centroids);
  REQUIRE(runs[0].qtable == runs[1].qtable);
}

TEST_CASE("quantizer snapshots round-trip exactly", "[vq]") {
  const Ldba aut = parse_ldba(reach_doc);
  const ChainEnv env = reach_chain(6);
  VqConfig cfg;
  cfg.delta = 0.9;
  cfg.episodes = 30;
  cfg.episode_cap = 40;
  RewardParams params(1.0, 0.05, false, 6);
  const Quantizer qz =
      vq_train(env, aut, params, cfg, InitialState::fixed({3.5}), 18);

  const std::string path = "build/test_quantizer.json";
  save_quantizer(qz, path);
  const Quantizer loaded = load_quantizer(path);
  REQUIRE(loaded.min_resolution == qz.min_resolution);
  REQUIRE(loaded.centroids == qz.centroids);
  REQUIRE(loaded.qtable == qz.qtable);
  std::remove(path.c_str());
}
