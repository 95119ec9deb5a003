/* oracle.hpp -- exact dynamic programming on small finite product MDPs.
 *
 * ChainEnv is a one-dimensional lattice world with deterministic unit
 * moves; combined with an automaton whose single accepting set makes the
 * frontier static, its product enumerates into a finite MDP that plain
 * Q-iteration solves to machine precision.  The trainers are checked
 * against this ground truth.
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tlsynth/automata.hpp"
#include "tlsynth/environment.hpp"
#include "tlsynth/product.hpp"

namespace tlsynth {

// unit-width cells on [0, n]; states live on the half-integer lattice
class ChainEnv final : public Environment {
 public:
  ChainEnv(int n_cells, std::vector<Label> cell_labels)
      : n_cells_(n_cells),
        labels_(std::move(cell_labels)),
        actions_{{"left", "right", "stay"}},
        box_{{0.0}, {static_cast<double>(n_cells)}} {
    if (n_cells < 1) throw std::invalid_argument("chain needs >= 1 cell");
    if (labels_.size() != static_cast<std::size_t>(n_cells))
      throw std::invalid_argument("one label per cell required");
  }

  std::size_t dimension() const override { return 1; }
  const ActionSet& actions() const override { return actions_; }
  const Box& bounds() const override { return box_; }

  Label label(const State& s) const override {
    return labels_[static_cast<std::size_t>(cell_of(s[0]))];
  }

  // deterministic: +-1 along the lattice, clamped to stay on it
  State step(const State& s, int action, Rng&) const override {
    double x = s[0];
    switch (action) {
      case 0: x = std::max(0.5, x - 1.0); break;
      case 1: x = std::min(n_cells_ - 0.5, x + 1.0); break;
      case 2: break;
      default: throw std::invalid_argument("chain: unknown action");
    }
    return {x};
  }

  int n_cells() const { return n_cells_; }

  int cell_of(double x) const {
    int cell = static_cast<int>(std::floor(x));
    if (cell < 0) cell = 0;
    if (cell >= n_cells_) cell = n_cells_ - 1;
    return cell;
  }

  double center_of(int cell) const { return cell + 0.5; }

 private:
  int n_cells_;
  std::vector<Label> labels_;
  ActionSet actions_;
  Box box_;
};

struct FiniteOutcome {
  double probability = 1.0;
  int next = 0;
  double reward = 0.0;
};

struct FiniteMdp {
  int n_states = 0;
  int n_actions = 0;
  // transitions[s][a] -> weighted outcomes
  std::vector<std::vector<std::vector<FiniteOutcome>>> transitions;

  static FiniteMdp make(int n_states, int n_actions) {
    FiniteMdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.transitions.assign(
        static_cast<std::size_t>(n_states),
        std::vector<std::vector<FiniteOutcome>>(
            static_cast<std::size_t>(n_actions)));
    return m;
  }
};

struct OracleSolution {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> q;  // row-major [state][action]
  int iterations = 0;
  double residual = 0.0;

  double at(int s, int a) const {
    return q[static_cast<std::size_t>(s) * n_actions + a];
  }
  double state_value(int s) const {
    double best = at(s, 0);
    for (int a = 1; a < n_actions; ++a) best = std::max(best, at(s, a));
    return best;
  }
  int policy(int s) const {  // first argmax
    int best = 0;
    for (int a = 1; a < n_actions; ++a)
      if (at(s, a) > at(s, best)) best = a;
    return best;
  }
  bool is_optimal(int s, int a, double tol = 1e-9) const {
    return at(s, a) >= state_value(s) - tol;
  }
};

// Q-iteration to a sup-norm fixpoint on an explicitly known finite MDP
inline OracleSolution exact_dp_oracle(const FiniteMdp& mdp, double gamma,
                                      double tol = 1e-9,
                                      int max_iterations = 1000000) {
  if (gamma < 0.0 || gamma >= 1.0)
    throw std::invalid_argument("oracle needs gamma in [0, 1)");
  OracleSolution sol;
  sol.n_states = mdp.n_states;
  sol.n_actions = mdp.n_actions;
  sol.q.assign(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
  std::vector<double> next(sol.q.size());
  for (int it = 0; it < max_iterations; ++it) {
    double delta = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        double acc = 0.0;
        for (const FiniteOutcome& o : mdp.transitions[s][a]) {
          double best = sol.at(o.next, 0);
          for (int a2 = 1; a2 < mdp.n_actions; ++a2)
            best = std::max(best, sol.at(o.next, a2));
          acc += o.probability * (o.reward + gamma * best);
        }
        next[static_cast<std::size_t>(s) * mdp.n_actions + a] = acc;
        delta = std::max(delta,
                         std::abs(acc - sol.at(s, a)));
      }
    }
    sol.q.swap(next);
    sol.iterations = it + 1;
    sol.residual = delta;
    if (delta < tol) return sol;
  }
  throw std::runtime_error("exact_dp_oracle: no fixpoint within the iteration cap");
}

// Enumerated product of a deterministic chain and an automaton whose
// accepting family is a single set (static frontier): product state
// (cell, q) flattens to cell * |Q| + q, with one extra sink row per cell
// folded into a single absorbing state.
struct ChainProduct {
  FiniteMdp mdp;
  int n_cells = 0;
  int n_aut = 0;
  int sink_index = 0;  // single absorbing zero-reward state

  int index(int cell, AutState q) const {
    return q == sink_state ? sink_index : cell * n_aut + q;
  }
};

inline ChainProduct enumerate_chain_product(const ChainEnv& env,
                                            const Ldba& aut,
                                            double positive_reward) {
  if (aut.accepting_sets.size() != 1)
    throw std::invalid_argument(
        "chain product enumeration needs a single accepting set");
  if (aut.has_eps_moves())
    throw std::invalid_argument(
        "chain product enumeration does not support epsilon moves");
  ChainProduct cp;
  cp.n_cells = env.n_cells();
  cp.n_aut = static_cast<int>(aut.size());
  cp.sink_index = cp.n_cells * cp.n_aut;
  cp.mdp = FiniteMdp::make(cp.sink_index + 1,
                           static_cast<int>(env.actions().size()));

  Rng unused(0);
  const Frontier owed = initial_frontier(aut);
  for (int cell = 0; cell < cp.n_cells; ++cell) {
    for (AutState q = 0; q < cp.n_aut; ++q) {
      for (int a = 0; a < cp.mdp.n_actions; ++a) {
        const State s{env.center_of(cell)};
        const State s2 = env.step(s, a, unused);
        const auto successors = step_automaton(aut, q, env.label(s2));
        if (successors.size() != 1)
          throw std::invalid_argument(
              "chain product enumeration hit a nondeterministic step");
        const AutState q2 = successors.front();
        const double r =
            (q2 != sink_state &&
             std::binary_search(owed.begin(), owed.end(), q2))
                ? positive_reward
                : 0.0;
        cp.mdp.transitions[cp.index(cell, q)][a].push_back(
            {1.0, cp.index(env.cell_of(s2[0]), q2), r});
      }
    }
  }
  for (int a = 0; a < cp.mdp.n_actions; ++a)
    cp.mdp.transitions[cp.sink_index][a].push_back({1.0, cp.sink_index, 0.0});
  return cp;
}

}  // namespace tlsynth
