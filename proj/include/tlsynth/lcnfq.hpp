/* lcnfq.hpp -- hybrid Q-function over one perceptron per automaton state,
 * trained offline by batch fitted Q-iteration.
 *
 * Each automaton state owns a network; together they approximate the
 * product-MDP Q-function.  Per training cycle every network rebuilds its
 * pattern set from its slice of the experience (targets read the current
 * hybrid Q across networks, which couples them), then runs a fixed number
 * of Rprop epochs.  The cycle schedule walks automaton states from the
 * accepting side backwards so values propagate towards the initial states.
 * Training stops when the evaluated success rate stops improving.
 */
#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlsynth/automata.hpp"
#include "tlsynth/environment.hpp"
#include "tlsynth/evaluate.hpp"
#include "tlsynth/neural.hpp"
#include "tlsynth/product.hpp"
#include "tlsynth/rng.hpp"

namespace tlsynth {

// Input encoding shared by all networks: MDP coordinates normalised to
// [0,1]^n followed by a one-hot slot per product action.  The automaton
// state is deliberately not encoded; each network owns exactly one.
struct QEncoding {
  Box bounds;
  std::size_t dimension = 0;
  std::size_t action_slots = 0;

  static QEncoding make(const Environment& env, const ProductActionSpace& space) {
    QEncoding enc;
    enc.bounds = env.bounds();
    enc.dimension = env.dimension();
    enc.action_slots = space.size();
    return enc;
  }

  int input_dim() const {
    return static_cast<int>(dimension + action_slots);
  }

  void encode(const State& s, std::size_t action_index,
              std::vector<double>& out) const {
    out.assign(dimension + action_slots, 0.0);
    const State norm = bounds.normalized(s);
    for (std::size_t i = 0; i < dimension; ++i) out[i] = norm[i];
    out[dimension + action_index] = 1.0;
  }
};

struct HybridQ {
  QEncoding encoding;
  std::vector<Mlp> nets;  // exactly one per automaton state

  double value(const ProductState& state, std::size_t action_index) const {
    if (state.q == sink_state) return 0.0;  // absorbing, never rewarded
    static thread_local std::vector<double> input;
    encoding.encode(state.s, action_index, input);
    return nets.at(static_cast<std::size_t>(state.q)).forward(input);
  }

  double value(const ProductState& state, const ProductAction& action,
               const ProductActionSpace& space) const {
    return value(state, space.index(action));
  }

  // max over the product actions valid at the state's automaton component
  double max_value(const ProductState& state,
                   const ProductActionSpace& space) const {
    if (state.q == sink_state) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : space.valid_indices(state.q))
      best = std::max(best, value(state, idx));
    return best;
  }

  std::size_t argmax_action(const ProductState& state,
                            const ProductActionSpace& space) const {
    const auto& valid = space.valid_indices(state.q);
    if (state.q == sink_state) return valid.front();  // all zeros: tie-break
    std::size_t best = valid.front();
    double best_value = value(state, best);
    for (std::size_t k = 1; k < valid.size(); ++k) {
      const double v = value(state, valid[k]);
      if (v > best_value) {
        best_value = v;
        best = valid[k];
      }
    }
    return best;
  }
};

struct LcnfqConfig {
  double gamma = 0.9;
  int hidden_dim = 32;
  int epochs_per_cycle = 300;
  int max_cycles = 40;
  int patience = 5;  // stop after this many cycles without improvement
  RpropConfig rprop;
};

struct LcnfqCycle {
  int cycle = 0;
  double mean_loss = 0.0;
  double success_rate = 0.0;
};

struct LcnfqReport {
  std::vector<LcnfqCycle> cycles;
  std::size_t sample_count = 0;
  int best_cycle = -1;
  double best_success = 0.0;
  std::vector<AutState> schedule;
};

// one pattern per stored tuple; the target reads the current hybrid Q
inline PatternSet build_pattern_set(const HybridQ& hq, const ExperienceSet& set,
                                    std::span<const std::size_t> indices,
                                    const ProductActionSpace& space,
                                    double gamma) {
  PatternSet patterns;
  patterns.reserve(indices.size());
  for (std::size_t i : indices) {
    const ExperienceTuple& t = set.tuples[i];
    Pattern p;
    hq.encoding.encode(t.from.s, space.index(t.action), p.input);
    p.target = t.reward + gamma * hq.max_value(t.to, space);
    patterns.push_back(std::move(p));
  }
  return patterns;
}

// the returned policy keeps a reference to `hq`; the action space is copied
inline Policy greedy_policy(const HybridQ& hq, const ProductActionSpace& space) {
  Policy policy;
  policy.act = [&hq, space](const ProductState& state, Rng&) {
    return space.action(hq.argmax_action(state, space));
  };
  policy.resolve = [&hq, space](const State& s,
                                const std::vector<AutState>& candidates) {
    AutState best = candidates.front();
    double best_value = hq.max_value({s, best}, space);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      const double v = hq.max_value({s, candidates[k]}, space);
      if (v > best_value) {
        best_value = v;
        best = candidates[k];
      }
    }
    return best;
  };
  return policy;
}

inline HybridQ lcnfq_init(const Environment& env, const Ldba& aut,
                          const ProductActionSpace& space,
                          const LcnfqConfig& cfg, const State& start,
                          RewardParams& params, Rng& rng) {
  HybridQ hq;
  hq.encoding = QEncoding::make(env, space);
  for (std::size_t q = 0; q < aut.size(); ++q) {
    Mlp net = Mlp::make(hq.encoding.input_dim(), cfg.hidden_dim);
    init_weights(net, rng);
    // anchor each fresh net at the start state: one random action maps to
    // the neutral reward level
    const auto& valid = space.valid_indices(static_cast<AutState>(q));
    const std::size_t action = valid[rng.index(valid.size())];
    Pattern anchor;
    hq.encoding.encode(start, action, anchor.input);
    anchor.target = params.neutral_reward();
    PatternSet patterns{anchor};
    RpropState st = RpropState::make(net.parameter_count(), cfg.rprop);
    for (int epoch = 0; epoch < cfg.epochs_per_cycle; ++epoch)
      rprop_epoch(net, st, patterns, cfg.rprop);
    hq.nets.push_back(std::move(net));
  }
  return hq;
}

inline HybridQ lcnfq_train(const Environment& env, const Ldba& aut,
                           const ExperienceSet& experience,
                           const RewardParams& reward_template,
                           const LcnfqConfig& cfg, const EvalConfig& eval,
                           std::uint64_t seed, LcnfqReport* report = nullptr) {
  const ProductActionSpace space(aut, env.actions());
  Rng rng(mix_seed(seed, 100));

  // per-state projections of the experience
  std::vector<std::vector<std::size_t>> slices(aut.size());
  bool any = false;
  for (std::size_t i = 0; i < experience.size(); ++i) {
    const AutState q = experience.tuples[i].q;
    if (q == sink_state) continue;  // the sink has no network
    slices[static_cast<std::size_t>(q)].push_back(i);
    any = true;
  }
  if (!any)
    throw std::invalid_argument(
        "lcnfq_train: experience is empty for every automaton state");

  RewardParams init_params(reward_template.positive_base,
                           reward_template.noise_scale, reward_template.noisy,
                           mix_seed(seed, 101));
  Rng init_rng(mix_seed(seed, 102));
  const State anchor_state = sample_initial(env, eval.initial, init_rng);
  HybridQ hq =
      lcnfq_init(env, aut, space, cfg, anchor_state, init_params, rng);

  const std::vector<AutState> schedule = backward_training_order(aut);
  if (report != nullptr) {
    report->cycles.clear();
    report->sample_count = experience.size();
    report->schedule = schedule;
    report->best_cycle = -1;
    report->best_success = 0.0;
  }

  HybridQ best = hq;
  double best_success = -1.0;
  int best_cycle = -1;
  int since_improvement = 0;
  for (int cycle = 0; cycle < cfg.max_cycles; ++cycle) {
    double loss_sum = 0.0;
    std::size_t loss_terms = 0;
    for (AutState q : schedule) {
      const auto& idx = slices[static_cast<std::size_t>(q)];
      if (idx.empty()) continue;  // no experience for this state this run
      const PatternSet patterns =
          build_pattern_set(hq, experience, idx, space, cfg.gamma);
      Mlp& net = hq.nets[static_cast<std::size_t>(q)];
      RpropState st = RpropState::make(net.parameter_count(), cfg.rprop);
      double last = 0.0;
      for (int epoch = 0; epoch < cfg.epochs_per_cycle; ++epoch)
        last = rprop_epoch(net, st, patterns, cfg.rprop);
      loss_sum += last / static_cast<double>(patterns.size());
      ++loss_terms;
    }

    const Policy policy = greedy_policy(hq, space);
    const EvalResult eval_result =
        evaluate_policy(policy, env, aut, reward_template, eval,
                        mix_seed(seed, 200 + static_cast<std::uint64_t>(cycle)),
                        /*success_only=*/true);
    if (report != nullptr)
      report->cycles.push_back(
          {cycle, loss_terms ? loss_sum / loss_terms : 0.0,
           eval_result.success_rate});

    if (eval_result.success_rate > best_success) {
      best_success = eval_result.success_rate;
      best = hq;
      best_cycle = cycle;
      since_improvement = 0;
    } else if (best_success > 0.0 && ++since_improvement >= cfg.patience) {
      // plateau counting starts once the policy succeeds at all; an
      // all-zero curve is not yet a plateau of a learning curve
      break;
    }
  }
  if (report != nullptr) {
    report->best_cycle = best_cycle;
    report->best_success = best_success < 0.0 ? 0.0 : best_success;
  }
  return best;
}

// snapshot directory: manifest plus one network file per automaton state
inline void save_hybrid_q(const HybridQ& hq, const Ldba& aut,
                          const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "hybrid-q-v1";
  manifest["bounds_lo"] = hq.encoding.bounds.lo;
  manifest["bounds_hi"] = hq.encoding.bounds.hi;
  manifest["dimension"] = hq.encoding.dimension;
  manifest["action_slots"] = hq.encoding.action_slots;
  nlohmann::json nets = nlohmann::json::array();
  for (std::size_t q = 0; q < hq.nets.size(); ++q) {
    const std::string file = "net_" + aut.state_names[q] + ".json";
    save_mlp(hq.nets[q], (fs::path(dir) / file).string());
    nets.push_back({{"state", aut.state_names[q]}, {"file", file}});
  }
  manifest["nets"] = nets;
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

inline HybridQ load_hybrid_q(const Ldba& aut, const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("cannot open manifest in " + dir);
  nlohmann::json manifest;
  in >> manifest;
  if (manifest.at("format").get<std::string>() != "hybrid-q-v1")
    throw std::runtime_error("unsupported hybrid-q snapshot format");
  HybridQ hq;
  hq.encoding.bounds.lo = manifest.at("bounds_lo").get<State>();
  hq.encoding.bounds.hi = manifest.at("bounds_hi").get<State>();
  hq.encoding.dimension = manifest.at("dimension").get<std::size_t>();
  hq.encoding.action_slots = manifest.at("action_slots").get<std::size_t>();
  hq.nets.resize(aut.size());
  std::size_t found = 0;
  for (const auto& entry : manifest.at("nets")) {
    const AutState q = aut.state_id(entry.at("state").get<std::string>());
    if (q == sink_state)
      throw std::runtime_error("snapshot references an unknown automaton state");
    hq.nets[static_cast<std::size_t>(q)] =
        load_mlp((fs::path(dir) / entry.at("file").get<std::string>()).string());
    ++found;
  }
  if (found != aut.size())
    throw std::runtime_error("snapshot is missing networks for some states");
  return hq;
}

}  // namespace tlsynth
