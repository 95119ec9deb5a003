/* evaluate.hpp -- policy rollouts, success-rate evaluation and path export.
 *
 * A finite rollout counts as satisfying when the accepting frontier is
 * fully exhausted and reset at least once within the step cap; for the
 * bundled automata the accepting states are absorbing under the target
 * label, so one full frontier pass witnesses the property.
 */
#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "tlsynth/automata.hpp"
#include "tlsynth/environment.hpp"
#include "tlsynth/product.hpp"
#include "tlsynth/rng.hpp"

namespace tlsynth {

struct Policy {
  std::function<ProductAction(const ProductState&, Rng&)> act;
  // optional value-based resolution of nondeterministic automaton
  // successors; uniform when absent
  NondetResolver resolve;
};

// default evaluation horizon: ten map crossings
inline int default_step_cap(const Environment& env, double max_step) {
  return static_cast<int>(10.0 * env.bounds().diagonal() / max_step);
}

struct RolloutOptions {
  int step_cap = 1000;
  double gamma = 0.9;
  bool stop_on_success = false;
  bool record_path = false;
};

struct RolloutResult {
  bool success = false;
  int success_step = -1;
  int steps = 0;
  double discounted_reward = 0.0;
  // populated when record_path is set
  std::vector<ProductState> path;
  std::vector<ProductAction> actions;
  std::vector<double> rewards;
  std::vector<Label> labels;
};

inline RolloutResult rollout(const Policy& policy, const Environment& env,
                             const Ldba& aut, RewardParams& params,
                             const InitialState& initial,
                             const RolloutOptions& opt, Rng& env_rng,
                             Rng& policy_rng, Rng& init_rng) {
  RolloutResult res;
  ProductState state{sample_initial(env, initial, init_rng), aut.initial};
  Frontier frontier = initial_frontier(aut);
  if (opt.record_path) res.path.push_back(state);
  double discount = 1.0;
  for (int step = 0; step < opt.step_cap; ++step) {
    const ProductAction action = policy.act(state, policy_rng);
    ProductState next = product_step(env, aut, state, action, env_rng,
                                     policy_rng, policy.resolve);
    const RewardOutcome r = reward(state, action, next, frontier, aut, params);
    res.discounted_reward += discount * r.value;
    discount *= opt.gamma;
    ++res.steps;
    if (opt.record_path) {
      res.path.push_back(next);
      res.actions.push_back(action);
      res.rewards.push_back(r.value);
      // the read word: epsilon moves consume no label
      if (!action.is_eps()) res.labels.push_back(env.label(next.s));
    }
    if (r.pass_completed && !res.success) {
      res.success = true;
      res.success_step = step + 1;
      if (opt.stop_on_success) break;
    }
    state = std::move(next);
  }
  return res;
}

struct EvalConfig {
  int trials = 100;
  int step_cap = 1000;
  double gamma = 0.9;
  InitialState initial;
};

struct EvalResult {
  double success_rate = 0.0;
  double mean_discounted_reward = 0.0;
  int successes = 0;
};

// N seeded rollouts; deterministic given (policy snapshot, seed)
inline EvalResult evaluate_policy(const Policy& policy, const Environment& env,
                                  const Ldba& aut,
                                  const RewardParams& reward_template,
                                  const EvalConfig& cfg, std::uint64_t seed,
                                  bool success_only = false) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  EvalResult out;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    RewardParams params(reward_template.positive_base,
                        reward_template.noise_scale, reward_template.noisy,
                        mix_seed(seed, 4 * trial + 0));
    Rng env_rng(mix_seed(seed, 4 * trial + 1));
    Rng policy_rng(mix_seed(seed, 4 * trial + 2));
    Rng init_rng(mix_seed(seed, 4 * trial + 3));
    RolloutOptions opt;
    opt.step_cap = cfg.step_cap;
    opt.gamma = cfg.gamma;
    opt.stop_on_success = success_only;
    const RolloutResult res = rollout(policy, env, aut, params, cfg.initial,
                                      opt, env_rng, policy_rng, init_rng);
    if (res.success) ++out.successes;
    out.mean_discounted_reward += res.discounted_reward;
  }
  out.success_rate = static_cast<double>(out.successes) / cfg.trials;
  out.mean_discounted_reward /= cfg.trials;
  return out;
}

// writes one rollout as a plottable text table: step, coordinates,
// automaton state, action, reward
inline RolloutResult export_path(const Policy& policy, const Environment& env,
                                 const Ldba& aut,
                                 const RewardParams& reward_template,
                                 const InitialState& initial, int step_cap,
                                 double gamma, std::uint64_t seed,
                                 const std::string& file) {
  RewardParams params(reward_template.positive_base,
                      reward_template.noise_scale, reward_template.noisy,
                      mix_seed(seed, 0));
  Rng env_rng(mix_seed(seed, 1));
  Rng policy_rng(mix_seed(seed, 2));
  Rng init_rng(mix_seed(seed, 3));
  RolloutOptions opt;
  opt.step_cap = step_cap;
  opt.gamma = gamma;
  opt.record_path = true;
  const ProductActionSpace space(aut, env.actions());
  const RolloutResult res = rollout(policy, env, aut, params, initial, opt,
                                    env_rng, policy_rng, init_rng);

  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open path file: " + file);
  out << "# step";
  for (std::size_t d = 0; d < env.dimension(); ++d) out << " x" << d;
  out << " q action reward\n";
  char buf[32];
  for (std::size_t i = 0; i < res.path.size(); ++i) {
    out << i;
    for (double v : res.path[i].s) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << ' ' << aut.name(res.path[i].q);
    if (i == 0) {
      out << " - 0\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%.17g", res.rewards[i - 1]);
    out << ' ' << space.action_name(res.actions[i - 1], aut) << ' ' << buf
        << '\n';
  }
  return res;
}

}  // namespace tlsynth
