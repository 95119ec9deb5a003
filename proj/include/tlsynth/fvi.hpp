/* fvi.hpp -- kernel-averager fitted value iteration on the product MDP.
 *
 * One sub-value function per automaton state, each carried by the same
 * uniform grid of centers over the state space.  The approximation at a
 * query point is the kernel-weighted convex combination of center values
 * with the radial kernel exp(-|s - s_i|/h) evaluated on normalised
 * coordinates.  Bellman backups replace the expectation with a Monte Carlo
 * mean over successor states drawn once, before the sweep loop.  Centers
 * of accepting states keep their initial value and are never sampled:
 * reaching them settles the property, so there is nothing to back up.
 */
#pragma once

#include <cmath>
#include <fstream>
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

struct ValueTable {
  Box bounds;
  double smoothing = 0.18;                   // h, in normalised units
  std::vector<State> centers;                // shared across automaton states
  std::vector<State> centers_normalized;     // cached for kernel queries
  std::vector<std::vector<double>> values;   // [automaton state][center]

  std::size_t center_count() const { return centers.size(); }

  // kernel-weighted convex combination of one sub-value function; the
  // denominator is strictly positive because the kernel never vanishes
  double kernel_value(const State& s, AutState q) const {
    if (q == sink_state) return 0.0;  // absorbing rejection
    const State query = bounds.normalized(s);
    const std::vector<double>& v = values[static_cast<std::size_t>(q)];
    double weight_sum = 0.0;
    double value_sum = 0.0;
    for (std::size_t i = 0; i < centers_normalized.size(); ++i) {
      const double w =
          std::exp(-distance(centers_normalized[i], query) / smoothing);
      weight_sum += w;
      value_sum += w * v[i];
    }
    return value_sum / weight_sum;
  }

  double kernel_value(const ProductState& state) const {
    return kernel_value(state.s, state.q);
  }
};

// axis-aligned grid of cell centers, k per automaton state; k must have an
// integer d-th root in d dimensions
inline std::vector<State> uniform_centers(const Box& bounds, int k) {
  const std::size_t dim = bounds.dimension();
  int side = 0;
  if (dim == 1) {
    side = k;
  } else {
    side = static_cast<int>(std::llround(std::pow(double(k), 1.0 / double(dim))));
    int check = 1;
    for (std::size_t d = 0; d < dim; ++d) check *= side;
    if (check != k)
      throw std::invalid_argument(
          "center count must be a perfect power of the dimension");
  }
  std::vector<State> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::vector<int> idx(dim, 0);
  while (true) {
    State s(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const double w = bounds.hi[d] - bounds.lo[d];
      s[d] = bounds.lo[d] + w * (idx[d] + 0.5) / side;
    }
    centers.push_back(std::move(s));
    std::size_t d = 0;
    while (d < dim && ++idx[d] == side) idx[d++] = 0;
    if (d == dim) break;
  }
  return centers;
}

struct FviConfig {
  int k = 100;          // centers per automaton state
  double h = 0.18;      // kernel smoothing, normalised coordinates
  int Z = 25;           // Monte Carlo samples per (center, action)
  int sweeps = 80;
  double tolerance = 1e-6;  // early exit when a sweep changes nothing
  int policy_samples = 25;  // fresh draws per greedy decision
};

// successor states drawn once per (automaton state, center, action) before
// the sweep loop; accepting automaton states are not sampled
struct SampleCache {
  int Z = 0;
  // [automaton state][center * n_actions + action] -> Z successors
  std::vector<std::vector<std::vector<ProductState>>> samples;
  std::size_t draws = 0;

  const std::vector<ProductState>& at(AutState q, std::size_t center,
                                      std::size_t action,
                                      std::size_t n_actions) const {
    const auto& row = samples[static_cast<std::size_t>(q)];
    if (row.empty()) throw std::out_of_range("sample cache: state not sampled");
    return row[center * n_actions + action];
  }

  bool sampled(AutState q) const {
    return !samples[static_cast<std::size_t>(q)].empty();
  }
};

inline SampleCache draw_sample_cache(const Environment& env, const Ldba& aut,
                                     const std::vector<State>& centers,
                                     int Z, Rng& rng) {
  SampleCache cache;
  cache.Z = Z;
  cache.samples.resize(aut.size());
  const std::size_t n_actions = env.actions().size();
  for (AutState q = 0; q < static_cast<AutState>(aut.size()); ++q) {
    if (aut.accepting(q)) continue;
    auto& row = cache.samples[static_cast<std::size_t>(q)];
    row.resize(centers.size() * n_actions);
    for (std::size_t i = 0; i < centers.size(); ++i) {
      for (std::size_t a = 0; a < n_actions; ++a) {
        auto& bucket = row[i * n_actions + a];
        bucket.reserve(static_cast<std::size_t>(Z));
        for (int z = 0; z < Z; ++z) {
          State next = env.step(centers[i], static_cast<int>(a), rng);
          const auto successors = step_automaton(aut, q, env.label(next));
          // the deterministic part gives a unique successor; in the
          // nondeterministic part resolve uniformly at sampling time
          const AutState q2 =
              successors.size() == 1
                  ? successors.front()
                  : successors[rng.index(successors.size())];
          bucket.push_back({std::move(next), q2});
          ++cache.draws;
        }
      }
    }
  }
  return cache;
}

// Monte Carlo estimate of the Bellman integral: the mean approximate value
// over the cached successors
inline double mc_backup(const ValueTable& vt, const SampleCache& cache,
                        AutState q, std::size_t center, std::size_t action,
                        std::size_t n_actions) {
  const auto& bucket = cache.at(q, center, action, n_actions);
  double acc = 0.0;
  for (const ProductState& y : bucket) acc += vt.kernel_value(y);
  return acc / static_cast<double>(bucket.size());
}

struct FviReport {
  std::size_t sample_complexity = 0;  // k * Z * |A| * (|Q| - accepting states)
  int sweeps_run = 0;
  double final_delta = 0.0;
  std::string note;
};

inline ValueTable fvi_train(const Environment& env, const Ldba& aut,
                            const RewardParams& reward_template,
                            const FviConfig& cfg, std::uint64_t seed,
                            FviReport* report = nullptr) {
  if (cfg.k < 1 || cfg.Z < 1)
    throw std::invalid_argument("fvi needs k >= 1 and Z >= 1");
  if (aut.has_eps_moves())
    throw std::invalid_argument(
        "fvi supports automata without epsilon moves only");

  ValueTable vt;
  vt.bounds = env.bounds();
  vt.smoothing = cfg.h;
  vt.centers = uniform_centers(vt.bounds, cfg.k);
  vt.centers_normalized.reserve(vt.centers.size());
  for (const State& c : vt.centers)
    vt.centers_normalized.push_back(vt.bounds.normalized(c));

  // terminal-reward initialisation: accepting states start at the positive
  // level, everything else at the neutral level
  RewardParams params(reward_template.positive_base,
                      reward_template.noise_scale, reward_template.noisy,
                      mix_seed(seed, 401));
  vt.values.resize(aut.size());
  const Frontier owed = initial_frontier(aut);
  for (AutState q = 0; q < static_cast<AutState>(aut.size()); ++q) {
    auto& v = vt.values[static_cast<std::size_t>(q)];
    v.resize(vt.centers.size());
    const bool accepting =
        std::binary_search(owed.begin(), owed.end(), q);
    for (double& x : v)
      x = accepting ? params.positive_reward() : params.neutral_reward();
  }

  Rng sample_rng(mix_seed(seed, 402));
  const SampleCache cache =
      draw_sample_cache(env, aut, vt.centers, cfg.Z, sample_rng);

  const std::size_t n_actions = env.actions().size();
  const std::vector<AutState> schedule = backward_training_order(aut);

  int sweeps_run = 0;
  double delta = 0.0;
  std::vector<double> fresh(vt.centers.size());
  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    delta = 0.0;
    for (AutState q : schedule) {
      if (!cache.sampled(q)) continue;  // accepting: value pinned at init
      for (std::size_t i = 0; i < vt.centers.size(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n_actions; ++a)
          best = std::max(best, mc_backup(vt, cache, q, i, a, n_actions));
        fresh[i] = best;
      }
      auto& v = vt.values[static_cast<std::size_t>(q)];
      for (std::size_t i = 0; i < vt.centers.size(); ++i) {
        delta = std::max(delta, std::abs(fresh[i] - v[i]));
        v[i] = fresh[i];
      }
    }
    ++sweeps_run;
    if (delta < cfg.tolerance) break;
  }

  if (report != nullptr) {
    report->sample_complexity = cache.draws;
    report->sweeps_run = sweeps_run;
    report->final_delta = delta;
    report->note =
        "sample complexity = k * Z * |A| * (|Q| - accepting states); "
        "accepting-state centers are not sampled";
  }
  return vt;
}

// greedy one-step lookahead with fresh Monte Carlo draws at every decision
inline Policy fvi_policy(const ValueTable& vt, const Environment& env,
                         const Ldba& aut, int policy_samples) {
  if (policy_samples < 1)
    throw std::invalid_argument("policy needs >= 1 samples per decision");
  Policy policy;
  const std::size_t n_actions = env.actions().size();
  policy.act = [&vt, &env, &aut, n_actions, policy_samples](
                   const ProductState& state, Rng& rng) {
    std::size_t best_action = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n_actions; ++a) {
      double acc = 0.0;
      for (int z = 0; z < policy_samples; ++z) {
        State next = env.step(state.s, static_cast<int>(a), rng);
        AutState q2 = sink_state;
        if (state.q != sink_state) {
          const auto successors = step_automaton(aut, state.q, env.label(next));
          q2 = successors.size() == 1
                   ? successors.front()
                   : successors[rng.index(successors.size())];
        }
        acc += vt.kernel_value({std::move(next), q2});
      }
      const double value = acc / policy_samples;
      if (value > best_value) {
        best_value = value;
        best_action = a;
      }
    }
    return ProductAction::base_action(static_cast<int>(best_action));
  };
  policy.resolve = [&vt](const State& s, const std::vector<AutState>& cands) {
    AutState best = cands.front();
    double best_v = vt.kernel_value(s, best);
    for (std::size_t k = 1; k < cands.size(); ++k) {
      const double v = vt.kernel_value(s, cands[k]);
      if (v > best_v) {
        best_v = v;
        best = cands[k];
      }
    }
    return best;
  };
  return policy;
}

inline void save_value_table(const ValueTable& vt, const std::string& path) {
  nlohmann::json j;
  j["format"] = "value-table-v1";
  j["bounds_lo"] = vt.bounds.lo;
  j["bounds_hi"] = vt.bounds.hi;
  j["smoothing"] = vt.smoothing;
  j["centers"] = vt.centers;
  j["values"] = vt.values;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open value table file: " + path);
  out << j.dump() << '\n';
}

inline ValueTable load_value_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open value table file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("format").get<std::string>() != "value-table-v1")
    throw std::runtime_error("unsupported value table snapshot format");
  ValueTable vt;
  vt.bounds.lo = j.at("bounds_lo").get<State>();
  vt.bounds.hi = j.at("bounds_hi").get<State>();
  vt.smoothing = j.at("smoothing").get<double>();
  vt.centers = j.at("centers").get<std::vector<State>>();
  vt.values = j.at("values").get<std::vector<std::vector<double>>>();
  vt.centers_normalized.clear();
  for (const State& c : vt.centers)
    vt.centers_normalized.push_back(vt.bounds.normalized(c));
  return vt;
}

// value-field export for heatmap plotting: one row per (q, center, value)
inline void export_value_field(const ValueTable& vt, const Ldba& aut,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open value field file: " + path);
  out << "# q x.. value\n";
  char buf[32];
  for (std::size_t q = 0; q < vt.values.size(); ++q)
    for (std::size_t i = 0; i < vt.centers.size(); ++i) {
      out << aut.name(static_cast<AutState>(q));
      for (double x : vt.centers[i]) out << ' ' << x;
      std::snprintf(buf, sizeof buf, "%.17g", vt.values[q][i]);
      out << ' ' << buf << '\n';
    }
}

}  // namespace tlsynth
