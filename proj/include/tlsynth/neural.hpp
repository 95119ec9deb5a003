/* neural.hpp -- one-hidden-layer perceptron with tanh units.
 *
 * Training is full-batch: the loss is the sum of squared errors over a
 * pattern set, gradients come from backpropagation, and weight updates use
 * resilient backpropagation (Rprop).  Rprop adapts one step size per
 * parameter from gradient signs alone: the step grows by eta_plus while the
 * sign holds, shrinks by eta_minus on a sign change, and a sign change also
 * retracts the previous update and skips one adaptation round.
 */
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlsynth/rng.hpp"

namespace tlsynth {

// Parameters live in one flat vector laid out as [W1 | b1 | w2 | b2] so the
// optimizer can treat them uniformly.
struct Mlp {
  int input_dim = 0;
  int hidden_dim = 0;
  std::vector<double> params;

  static Mlp make(int input_dim, int hidden_dim) {
    if (input_dim < 1 || hidden_dim < 1)
      throw std::invalid_argument("Mlp dimensions must be >= 1");
    Mlp net;
    net.input_dim = input_dim;
    net.hidden_dim = hidden_dim;
    net.params.assign(net.parameter_count(), 0.0);
    return net;
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(hidden_dim) *
               static_cast<std::size_t>(input_dim) +
           static_cast<std::size_t>(hidden_dim) * 2 + 1;
  }

  std::size_t w1_at(int j, int i) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(input_dim) +
           static_cast<std::size_t>(i);
  }
  std::size_t b1_at(int j) const {
    return static_cast<std::size_t>(hidden_dim) *
               static_cast<std::size_t>(input_dim) +
           static_cast<std::size_t>(j);
  }
  std::size_t w2_at(int j) const {
    return static_cast<std::size_t>(hidden_dim) *
               static_cast<std::size_t>(input_dim) +
           static_cast<std::size_t>(hidden_dim) + static_cast<std::size_t>(j);
  }
  std::size_t b2_at() const { return parameter_count() - 1; }

  double forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim)
      throw std::invalid_argument("forward: input dimension mismatch");
    double out = params[b2_at()];
    const double* w1 = params.data();
    for (int j = 0; j < hidden_dim; ++j) {
      double pre = params[b1_at(j)];
      const double* row = w1 + static_cast<std::size_t>(j) * input_dim;
      for (int i = 0; i < input_dim; ++i) pre += row[i] * x[i];
      out += params[w2_at(j)] * std::tanh(pre);
    }
    return out;
  }
};

// symmetry-breaking initialisation, uniform in [-0.5, 0.5] per parameter
inline void init_weights(Mlp& net, Rng& rng) {
  for (double& p : net.params) p = rng.uniform(-0.5, 0.5);
}

struct Pattern {
  std::vector<double> input;
  double target = 0.0;
};

using PatternSet = std::vector<Pattern>;

inline double batch_loss(const Mlp& net, const PatternSet& patterns) {
  if (patterns.empty())
    throw std::invalid_argument("batch_loss: empty pattern set");
  double loss = 0.0;
  for (const auto& p : patterns) {
    const double e = net.forward(p.input) - p.target;
    loss += e * e;
  }
  return loss;
}

// sum-of-squares loss and its gradient over the whole pattern set
inline double batch_loss_and_gradient(const Mlp& net,
                                      const PatternSet& patterns,
                                      std::vector<double>& grad) {
  if (patterns.empty())
    throw std::invalid_argument("batch_loss_and_gradient: empty pattern set");
  grad.assign(net.parameter_count(), 0.0);
  std::vector<double> hidden(static_cast<std::size_t>(net.hidden_dim));
  double loss = 0.0;
  for (const auto& p : patterns) {
    if (static_cast<int>(p.input.size()) != net.input_dim)
      throw std::invalid_argument("pattern input dimension mismatch");
    double out = net.params[net.b2_at()];
    for (int j = 0; j < net.hidden_dim; ++j) {
      double pre = net.params[net.b1_at(j)];
      const double* row =
          net.params.data() + static_cast<std::size_t>(j) * net.input_dim;
      for (int i = 0; i < net.input_dim; ++i) pre += row[i] * p.input[i];
      hidden[static_cast<std::size_t>(j)] = std::tanh(pre);
      out += net.params[net.w2_at(j)] * hidden[static_cast<std::size_t>(j)];
    }
    const double err = out - p.target;
    loss += err * err;
    const double d_out = 2.0 * err;
    grad[net.b2_at()] += d_out;
    for (int j = 0; j < net.hidden_dim; ++j) {
      const double h = hidden[static_cast<std::size_t>(j)];
      grad[net.w2_at(j)] += d_out * h;
      const double d_pre = d_out * net.params[net.w2_at(j)] * (1.0 - h * h);
      grad[net.b1_at(j)] += d_pre;
      double* grow = grad.data() + static_cast<std::size_t>(j) * net.input_dim;
      for (int i = 0; i < net.input_dim; ++i) grow[i] += d_pre * p.input[i];
    }
  }
  return loss;
}

struct RpropConfig {
  double eta_plus = 1.2;
  double eta_minus = 0.5;
  double step_initial = 0.1;
  double step_min = 1e-6;
  double step_max = 50.0;
};

struct RpropState {
  std::vector<double> step;
  std::vector<double> prev_grad;
  std::vector<double> prev_update;

  static RpropState make(std::size_t n, const RpropConfig& cfg) {
    RpropState st;
    st.step.assign(n, cfg.step_initial);
    st.prev_grad.assign(n, 0.0);
    st.prev_update.assign(n, 0.0);
    return st;
  }
};

// one sign-based update of every parameter
inline void rprop_apply(std::vector<double>& params,
                        const std::vector<double>& grad, RpropState& st,
                        const RpropConfig& cfg) {
  if (params.size() != st.step.size() || grad.size() != st.step.size())
    throw std::invalid_argument("rprop_apply: state dimensions do not match");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    const double sign_product = g * st.prev_grad[i];
    if (sign_product > 0.0) {
      st.step[i] = std::min(st.step[i] * cfg.eta_plus, cfg.step_max);
      const double update = g > 0.0 ? -st.step[i] : st.step[i];
      params[i] += update;
      st.prev_update[i] = update;
      st.prev_grad[i] = g;
    } else if (sign_product < 0.0) {
      st.step[i] = std::max(st.step[i] * cfg.eta_minus, cfg.step_min);
      params[i] -= st.prev_update[i];  // retract the oscillating update
      st.prev_update[i] = 0.0;
      st.prev_grad[i] = 0.0;
    } else {
      const double update = g > 0.0 ? -st.step[i] : g < 0.0 ? st.step[i] : 0.0;
      params[i] += update;
      st.prev_update[i] = update;
      st.prev_grad[i] = g;
    }
  }
}

// full-batch epoch; returns the loss measured before the update
inline double rprop_epoch(Mlp& net, RpropState& st, const PatternSet& patterns,
                          const RpropConfig& cfg) {
  static thread_local std::vector<double> grad;
  const double loss = batch_loss_and_gradient(net, patterns, grad);
  rprop_apply(net.params, grad, st, cfg);
  return loss;
}

inline nlohmann::json mlp_to_json(const Mlp& net) {
  return nlohmann::json{{"format", "mlp-v1"},
                        {"input_dim", net.input_dim},
                        {"hidden_dim", net.hidden_dim},
                        {"params", net.params}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "mlp-v1")
    throw std::runtime_error("unsupported network snapshot format");
  Mlp net = Mlp::make(j.at("input_dim").get<int>(), j.at("hidden_dim").get<int>());
  net.params = j.at("params").get<std::vector<double>>();
  if (net.params.size() != net.parameter_count())
    throw std::runtime_error("network snapshot has the wrong parameter count");
  return net;
}

inline void save_mlp(const Mlp& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open network file: " + path);
  out << mlp_to_json(net).dump(2) << '\n';
}

inline Mlp load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file: " + path);
  nlohmann::json j;
  in >> j;
  return mlp_from_json(j);
}

}  // namespace tlsynth
