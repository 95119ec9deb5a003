/* vq.hpp -- episodic Voronoi quantizer with tabular Q-learning.
 *
 * The state space of the product is discretised on the fly: every visited
 * product state is mapped to its nearest centroid within the centroid list
 * of its automaton state, and a new centroid is inserted whenever that
 * distance exceeds the minimum resolution.  Q-values live on centroids.
 * Updates follow the one-step Q-learning rule, computed from the
 * underlying continuous transition; a transition that opens a new cell
 * only inserts the centroid (no update), matching the episodic scheme.
 */
#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlsynth/automata.hpp"
#include "tlsynth/environment.hpp"
#include "tlsynth/evaluate.hpp"
#include "tlsynth/product.hpp"
#include "tlsynth/rng.hpp"

namespace tlsynth {

struct Quantizer {
  double min_resolution = 0.0;
  std::size_t n_action_slots = 0;
  std::vector<std::vector<State>> centroids;                // per automaton state
  std::vector<std::vector<std::vector<double>>> qtable;     // [q][centroid][slot]

  struct Ref {
    AutState q = sink_state;
    int idx = -1;
    bool valid() const { return q != sink_state && idx >= 0; }
  };

  static Quantizer make(double delta, std::size_t n_states,
                        std::size_t n_action_slots) {
    if (delta <= 0.0)
      throw std::invalid_argument("minimum resolution must be positive");
    Quantizer qz;
    qz.min_resolution = delta;
    qz.n_action_slots = n_action_slots;
    qz.centroids.resize(n_states);
    qz.qtable.resize(n_states);
    return qz;
  }

  std::size_t centroid_count() const {
    std::size_t n = 0;
    for (const auto& c : centroids) n += c.size();
    return n;
  }

  // nearest centroid within the state's class; invalid when the class is
  // empty or the state is in the sink
  Ref nearest(const ProductState& state) const {
    if (state.q == sink_state) return {};
    const auto& list = centroids[static_cast<std::size_t>(state.q)];
    if (list.empty()) return {};
    int best = 0;
    double best_d = sq_distance(list[0], state.s);
    for (int i = 1; i < static_cast<int>(list.size()); ++i) {
      const double d = sq_distance(list[static_cast<std::size_t>(i)], state.s);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return {state.q, best};
  }

  // nearest-or-insert: a fresh centroid starts with all-zero Q-values
  std::pair<Ref, bool> quantize(const ProductState& state) {
    if (state.q == sink_state)
      throw std::invalid_argument("quantize: the sink state has no centroids");
    const Ref near = nearest(state);
    if (near.valid()) {
      const double d = distance(
          centroids[static_cast<std::size_t>(state.q)]
                   [static_cast<std::size_t>(near.idx)],
          state.s);
      if (d <= min_resolution) return {near, false};
    }
    auto& list = centroids[static_cast<std::size_t>(state.q)];
    list.push_back(state.s);
    qtable[static_cast<std::size_t>(state.q)].emplace_back(n_action_slots, 0.0);
    return {Ref{state.q, static_cast<int>(list.size()) - 1}, true};
  }

  double qvalue(const Ref& c, std::size_t slot) const {
    return qtable[static_cast<std::size_t>(c.q)]
                 [static_cast<std::size_t>(c.idx)][slot];
  }

  double max_q(const Ref& c, const ProductActionSpace& space) const {
    if (!c.valid()) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t slot : space.valid_indices(c.q))
      best = std::max(best, qvalue(c, slot));
    return best;
  }

  std::size_t argmax(const Ref& c, const ProductActionSpace& space) const {
    const auto& valid = space.valid_indices(c.q);
    std::size_t best = valid.front();
    double best_v = qvalue(c, best);
    for (std::size_t k = 1; k < valid.size(); ++k) {
      const double v = qvalue(c, valid[k]);
      if (v > best_v) {
        best_v = v;
        best = valid[k];
      }
    }
    return best;
  }
};

// the Q-learning assignment on one table cell; `next` absent means a
// terminal transition (future value zero)
inline void ql_update(Quantizer& qz, const Quantizer::Ref& c, std::size_t slot,
                      double r, const std::optional<Quantizer::Ref>& next,
                      const ProductActionSpace& space, double mu,
                      double gamma) {
  if (mu <= 0.0 || mu > 1.0)
    throw std::invalid_argument("learning rate must be in (0, 1]");
  if (!c.valid()) throw std::invalid_argument("ql_update: unknown centroid");
  const double future = next.has_value() ? qz.max_q(*next, space) : 0.0;
  double& cell = qz.qtable[static_cast<std::size_t>(c.q)]
                          [static_cast<std::size_t>(c.idx)][slot];
  cell = (1.0 - mu) * cell + mu * (r + gamma * future);
}

struct VqConfig {
  double delta = 0.4;        // minimum resolution
  int episodes = 2000;
  int episode_cap = 500;     // steps per episode
  double mu = 0.9;
  double gamma = 0.9;
  double eps_start = 1.0;    // exploration schedule, linear decay
  double eps_end = 0.05;
};

struct VqReport {
  std::size_t sample_count = 0;   // total transitions
  std::size_t centroid_count = 0;
  int episodes = 0;
};

inline Quantizer vq_train(const Environment& env, const Ldba& aut,
                          const RewardParams& reward_template,
                          const VqConfig& cfg, const InitialState& initial,
                          std::uint64_t seed, VqReport* report = nullptr) {
  const ProductActionSpace space(aut, env.actions());
  Quantizer qz = Quantizer::make(cfg.delta, aut.size(), space.size());
  RewardParams params(reward_template.positive_base,
                      reward_template.noise_scale, reward_template.noisy,
                      mix_seed(seed, 301));
  Rng env_rng(mix_seed(seed, 302));
  Rng explore_rng(mix_seed(seed, 303));
  Rng init_rng(mix_seed(seed, 304));

  std::size_t samples = 0;
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const double frac =
        cfg.episodes > 1 ? static_cast<double>(episode) / (cfg.episodes - 1)
                         : 1.0;
    const double eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;

    ProductState state{sample_initial(env, initial, init_rng), aut.initial};
    Frontier frontier = initial_frontier(aut);
    Quantizer::Ref cell = qz.quantize(state).first;

    for (int step = 0; step < cfg.episode_cap; ++step) {
      const auto& valid = space.valid_indices(state.q);
      std::size_t slot;
      if (explore_rng.uniform01() < eps) {
        slot = valid[explore_rng.index(valid.size())];
      } else {
        slot = qz.argmax(cell, space);
      }
      const ProductAction action = space.action(slot);
      ProductState next =
          product_step(env, aut, state, action, env_rng, explore_rng);
      const RewardOutcome r =
          reward(state, action, next, frontier, aut, params);
      ++samples;

      if (next.q == sink_state) {
        // the trap absorbs with zero future value
        ql_update(qz, cell, slot, r.value, std::nullopt, space, cfg.mu,
                  cfg.gamma);
        break;
      }
      const auto [next_cell, inserted] = qz.quantize(next);
      if (!inserted)
        ql_update(qz, cell, slot, r.value, next_cell, space, cfg.mu, cfg.gamma);
      cell = next_cell;
      state = std::move(next);
      if (r.pass_completed) break;  // success: re-localise
    }
  }

  if (report != nullptr) {
    report->sample_count = samples;
    report->centroid_count = qz.centroid_count();
    report->episodes = cfg.episodes;
  }
  return qz;
}

// greedy policy over the frozen quantizer; evaluation never inserts
inline Policy vq_policy(const Quantizer& qz, const ProductActionSpace& space) {
  Policy policy;
  policy.act = [&qz, space](const ProductState& state, Rng&) {
    const Quantizer::Ref cell = qz.nearest(state);
    if (!cell.valid())
      return space.action(space.valid_indices(state.q).front());
    return space.action(qz.argmax(cell, space));
  };
  policy.resolve = [&qz, space](const State& s,
                                const std::vector<AutState>& candidates) {
    AutState best = candidates.front();
    double best_v = qz.max_q(qz.nearest({s, best}), space);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      const double v = qz.max_q(qz.nearest({s, candidates[k]}), space);
      if (v > best_v) {
        best_v = v;
        best = candidates[k];
      }
    }
    return best;
  };
  return policy;
}

inline void save_quantizer(const Quantizer& qz, const std::string& path) {
  nlohmann::json j;
  j["format"] = "quantizer-v1";
  j["min_resolution"] = qz.min_resolution;
  j["action_slots"] = qz.n_action_slots;
  j["centroids"] = qz.centroids;
  j["qtable"] = qz.qtable;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open quantizer file: " + path);
  out << j.dump() << '\n';
}

inline Quantizer load_quantizer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open quantizer file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("format").get<std::string>() != "quantizer-v1")
    throw std::runtime_error("unsupported quantizer snapshot format");
  Quantizer qz;
  qz.min_resolution = j.at("min_resolution").get<double>();
  qz.n_action_slots = j.at("action_slots").get<std::size_t>();
  qz.centroids = j.at("centroids").get<std::vector<std::vector<State>>>();
  qz.qtable =
      j.at("qtable").get<std::vector<std::vector<std::vector<double>>>>();
  return qz;
}

// centroid cloud export for plotting the induced discretisation
inline void export_centroids(const Quantizer& qz, const Ldba& aut,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open centroid file: " + path);
  out << "# q x..\n";
  for (std::size_t q = 0; q < qz.centroids.size(); ++q)
    for (const State& c : qz.centroids[q]) {
      out << aut.name(static_cast<AutState>(q));
      for (double v : c) out << ' ' << v;
      out << '\n';
    }
}

}  // namespace tlsynth
