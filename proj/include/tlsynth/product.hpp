/* product.hpp -- on-the-fly synchronised product of an environment and an
 * LDBA.
 *
 * A product state pairs a continuous MDP state with an automaton state.
 * Product actions are the base MDP actions plus one epsilon action per
 * automaton state that can be reached by an epsilon move; taking an
 * epsilon action leaves the MDP state untouched with probability one.
 * The reward observes the successor's automaton component: a visit to a
 * state the accepting frontier still owes pays the positive reward and
 * shrinks the frontier.
 */
#pragma once

#include <array>
#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlsynth/automata.hpp"
#include "tlsynth/environment.hpp"
#include "tlsynth/geometry.hpp"
#include "tlsynth/rng.hpp"

namespace tlsynth {

struct ProductState {
  State s;
  AutState q = 0;
};

struct ProductAction {
  int base = -1;                      // >= 0: index into the base ActionSet
  AutState eps_target = sink_state;   // target of an epsilon action

  bool is_eps() const { return base < 0; }

  static ProductAction base_action(int a) { return ProductAction{a, sink_state}; }
  static ProductAction eps(AutState q) { return ProductAction{-1, q}; }

  friend bool operator==(const ProductAction& a, const ProductAction& b) {
    return a.base == b.base && a.eps_target == b.eps_target;
  }
};

// Shared indexing of the product action set: base actions first, then one
// epsilon slot per automaton state when the automaton has epsilon moves at
// all.  Tables and one-hot encodings all use this layout, and ties in any
// argmax break towards the lowest index.
class ProductActionSpace {
 public:
  ProductActionSpace(const Ldba& aut, const ActionSet& base)
      : base_(base),
        n_states_(static_cast<int>(aut.size())),
        with_eps_(aut.has_eps_moves()) {
    valid_.resize(aut.size());
    for (std::size_t q = 0; q < aut.size(); ++q) {
      for (int a = 0; a < static_cast<int>(base_.size()); ++a)
        valid_[q].push_back(static_cast<std::size_t>(a));
      if (with_eps_)
        for (AutState t : aut.eps_from[q])
          valid_[q].push_back(base_.size() + static_cast<std::size_t>(t));
    }
  }

  std::size_t size() const {
    return base_.size() + (with_eps_ ? static_cast<std::size_t>(n_states_) : 0);
  }

  ProductAction action(std::size_t idx) const {
    if (idx < base_.size()) return ProductAction::base_action(static_cast<int>(idx));
    return ProductAction::eps(static_cast<AutState>(idx - base_.size()));
  }

  std::size_t index(const ProductAction& a) const {
    if (!a.is_eps()) return static_cast<std::size_t>(a.base);
    if (!with_eps_)
      throw std::logic_error("epsilon action in an automaton without epsilon moves");
    return base_.size() + static_cast<std::size_t>(a.eps_target);
  }

  // actions available at automaton state q, in tie-break order; the sink
  // only offers the base actions
  const std::vector<std::size_t>& valid_indices(AutState q) const {
    if (q == sink_state) return sink_valid();
    return valid_.at(static_cast<std::size_t>(q));
  }

  std::vector<ProductAction> valid_actions(AutState q) const {
    std::vector<ProductAction> out;
    for (std::size_t idx : valid_indices(q)) out.push_back(action(idx));
    return out;
  }

  const ActionSet& base() const { return base_; }
  bool with_eps() const { return with_eps_; }

  std::string action_name(const ProductAction& a, const Ldba& aut) const {
    if (!a.is_eps()) return base_.names.at(static_cast<std::size_t>(a.base));
    return "eps:" + aut.name(a.eps_target);
  }

 private:
  const std::vector<std::size_t>& sink_valid() const {
    static thread_local std::vector<std::size_t> idx;
    if (idx.size() != base_.size()) {
      idx.clear();
      for (std::size_t a = 0; a < base_.size(); ++a) idx.push_back(a);
    }
    return idx;
  }

  ActionSet base_;
  int n_states_;
  bool with_eps_;
  std::vector<std::vector<std::size_t>> valid_;
};

struct RewardParams {
  double positive_base;  // M
  double noise_scale;    // m, requires m < M/10
  bool noisy;            // y switch: adds m*rand(s) noise to both branches
  Rng rng;

  RewardParams(double M, double m, bool y, std::uint64_t seed)
      : positive_base(M), noise_scale(m), noisy(y), rng(seed) {
    if (M <= 0.0 || m <= 0.0)
      throw std::invalid_argument("reward magnitudes must be positive");
    if (m >= M / 10.0)
      throw std::invalid_argument("reward params must satisfy m < M/10");
  }

  // fresh draw on every evaluation
  double positive_reward() {
    return positive_base + (noisy ? noise_scale * rng.open01() : 0.0);
  }
  double neutral_reward() { return noisy ? noise_scale * rng.open01() : 0.0; }
};

struct RewardOutcome {
  double value = 0.0;
  bool frontier_hit = false;   // successor automaton state was owed a visit
  bool pass_completed = false; // that visit cleared the last owed set
};

// Eq-style reward rule plus the frontier update that follows every
// evaluation.  The membership flag is returned so callers never have to
// compare the float against the neutral level.
inline RewardOutcome reward(const ProductState& /*from*/,
                            const ProductAction& /*action*/,
                            const ProductState& to, Frontier& frontier,
                            const Ldba& aut, RewardParams& params) {
  RewardOutcome out;
  if (to.q != sink_state &&
      std::binary_search(frontier.begin(), frontier.end(), to.q)) {
    out.frontier_hit = true;
    out.value = params.positive_reward();
  } else {
    out.value = params.neutral_reward();
  }
  if (to.q != sink_state) {
    auto step = frontier_advance(to.q, frontier, aut.accepting_sets);
    frontier = std::move(step.next);
    out.pass_completed = step.completed;
  }
  return out;
}

// resolves a successor set with more than one element (nondeterministic
// initial part); arguments are the sampled MDP successor and the candidates
using NondetResolver =
    std::function<AutState(const State&, const std::vector<AutState>&)>;

// One product transition.  Base actions sample the environment and read the
// successor's label; epsilon actions switch the automaton state only and
// consume no environment randomness.
inline ProductState product_step(const Environment& env, const Ldba& aut,
                                 const ProductState& from,
                                 const ProductAction& action, Rng& env_rng,
                                 Rng& resolve_rng,
                                 const NondetResolver& resolver = {}) {
  if (action.is_eps()) {
    if (from.q == sink_state)
      throw std::invalid_argument("epsilon action from the sink");
    const auto& targets = aut.eps_from.at(static_cast<std::size_t>(from.q));
    if (!std::binary_search(targets.begin(), targets.end(), action.eps_target))
      throw std::invalid_argument("epsilon action without a matching epsilon move");
    return ProductState{from.s, action.eps_target};
  }
  State next = env.step(from.s, action.base, env_rng);
  const auto successors = step_automaton(aut, from.q, env.label(next));
  AutState q;
  if (successors.size() == 1) {
    q = successors.front();
  } else if (resolver) {
    q = resolver(next, successors);
  } else {
    q = successors[resolve_rng.index(successors.size())];
  }
  return ProductState{std::move(next), q};
}

struct ExperienceTuple {
  ProductState from;
  ProductAction action;
  ProductState to;
  double reward = 0.0;
  AutState q = 0;  // automaton component of `from`
};

struct ExperienceSet {
  std::vector<ExperienceTuple> tuples;

  std::size_t size() const { return tuples.size(); }

  // projection onto one automaton state: indices of tuples whose fifth
  // field equals q
  std::vector<std::size_t> projection(AutState q) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tuples.size(); ++i)
      if (tuples[i].q == q) idx.push_back(i);
    return idx;
  }

  void save(const std::string& path, const Ldba& aut,
            const ProductActionSpace& space) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open experience file: " + path);
    out << "# x.. action x'.. reward q' q\n";
    char buf[32];
    for (const auto& t : tuples) {
      for (double v : t.from.s) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << ' ';
      }
      out << space.action_name(t.action, aut) << ' ';
      for (double v : t.to.s) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << ' ';
      }
      std::snprintf(buf, sizeof buf, "%.17g", t.reward);
      out << buf << ' ' << aut.name(t.to.q) << ' ' << aut.name(t.q) << '\n';
    }
  }

  static ExperienceSet load(const std::string& path, const Ldba& aut,
                            const ProductActionSpace& space,
                            std::size_t dimension) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experience file: " + path);
    ExperienceSet set;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream row(line);
      ExperienceTuple t;
      t.from.s.resize(dimension);
      for (double& v : t.from.s) row >> v;
      std::string action_name;
      row >> action_name;
      if (action_name.rfind("eps:", 0) == 0) {
        t.action = ProductAction::eps(aut.state_id(action_name.substr(4)));
      } else {
        const int base = space.base().index_of(action_name);
        if (base < 0)
          throw std::runtime_error("unknown action in experience file: " +
                                   action_name);
        t.action = ProductAction::base_action(base);
      }
      t.to.s.resize(dimension);
      for (double& v : t.to.s) row >> v;
      row >> t.reward;
      std::string to_q, from_q;
      row >> to_q >> from_q;
      t.to.q = to_q == "<sink>" ? sink_state : aut.state_id(to_q);
      t.q = from_q == "<sink>" ? sink_state : aut.state_id(from_q);
      t.from.q = t.q;
      if (!row) throw std::runtime_error("malformed experience record: " + line);
      set.tuples.push_back(std::move(t));
    }
    return set;
  }
};

struct ExplorationConfig {
  InitialState start;
  int reset_horizon;  // th: steps without a positive reward before a reset
};

// suggested reset horizon: enough steps to cross the map twice
inline int default_reset_horizon(const Environment& env, double max_step) {
  return static_cast<int>(2.0 * env.bounds().diagonal() / max_step);
}

// Episodic uniform-random exploration of the product.  An episode ends when
// a positive reward is received or after `reset_horizon` steps without one;
// collection stops once `budget` tuples are stored.
inline ExperienceSet gather_experience(const Environment& env, const Ldba& aut,
                                       RewardParams& params,
                                       const ExplorationConfig& explore,
                                       std::size_t budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("experience budget must be >= 1");
  const ProductActionSpace space(aut, env.actions());
  Rng env_rng(mix_seed(seed, 1));
  Rng explore_rng(mix_seed(seed, 2));
  Rng init_rng(mix_seed(seed, 3));

  ExperienceSet set;
  set.tuples.reserve(budget);
  while (set.tuples.size() < budget) {
    ProductState state{sample_initial(env, explore.start, init_rng), aut.initial};
    Frontier frontier = initial_frontier(aut);
    int since_positive = 0;
    while (set.tuples.size() < budget) {
      const auto& valid = space.valid_indices(state.q);
      const ProductAction action =
          space.action(valid[explore_rng.index(valid.size())]);
      ProductState next =
          product_step(env, aut, state, action, env_rng, explore_rng);
      const RewardOutcome r = reward(state, action, next, frontier, aut, params);
      set.tuples.push_back({state, action, next, r.value, state.q});
      if (r.frontier_hit) break;  // episode reset on positive reward
      if (++since_positive >= explore.reset_horizon) break;
      state = std::move(next);
    }
  }
  return set;
}

}  // namespace tlsynth
