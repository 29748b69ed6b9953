#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ebn/error.hpp"
#include "ebn/metrics.hpp"
#include "ebn/signals.hpp"
#include "ebn/types.hpp"

namespace ebn {

// Optimal recurrent connectivity -D^T D. Symmetric, negative semidefinite.
inline Matrix optimal_recurrent(const DecoderMatrix& d) {
  return -(d.entries().transpose() * d.entries());
}

// Standard spike thresholds ||D_n||^2 / 2.
inline std::vector<double> default_thresholds(const DecoderMatrix& d) {
  std::vector<double> t(d.n_neurons());
  for (std::size_t n = 0; n < t.size(); ++n) t[n] = 0.5 * d.column_norm_sq(n);
  return t;
}

namespace detail {

inline void check_shapes(const DecoderMatrix& d, const RecurrentMatrix& omega,
                         Eigen::Index x_size, Eigen::Index r_size) {
  const auto n = static_cast<Eigen::Index>(d.n_neurons());
  if (static_cast<Eigen::Index>(omega.size()) != n)
    throw ConfigError(fmt::format("recurrent matrix is {0}x{0}, decoder has {1} neurons",
                                  omega.size(), n));
  if (x_size != static_cast<Eigen::Index>(d.n_inputs()))
    throw ConfigError(fmt::format("input has {} entries, decoder expects {}", x_size,
                                  d.n_inputs()));
  if (r_size != n)
    throw ConfigError(fmt::format("rate vector has {} entries, expected {}", r_size, n));
}

}  // namespace detail

/// Membrane potentials V = D^T x + Omega r + v_rest.
///
/// The voltage is an algebraic function of the current input and filtered
/// spike trains; it is never integrated on its own. v_rest shifts the origin so
/// that the learning rule's dead band sits around the resting potential.
inline Vector membrane(const DecoderMatrix& d, const RecurrentMatrix& omega, const Vector& x_t,
                       const Vector& r_t, double v_rest = 0.0) {
  detail::check_shapes(d, omega, x_t.size(), r_t.size());
  Vector v = d.feedforward() * x_t;
  v.noalias() += omega.weights() * r_t;
  v.array() += v_rest;
  return v;
}

// Reconstruction x_hat = D r.
inline Vector decode(const DecoderMatrix& d, const Vector& r) {
  if (r.size() != static_cast<Eigen::Index>(d.n_neurons()))
    throw ConfigError(fmt::format("rate vector has {} entries, expected {}", r.size(),
                                  d.n_neurons()));
  return d.entries() * r;
}

/// Discrete rule on the voltage form:
///   increment if 2 v_before + w < -step/2 + 2 v_rest
///   decrement if 2 v_before + w >  step/2 + 2 v_rest
/// where w is the current physical weight and v_before the postsynaptic
/// membrane value read before the spike's effect is applied.
inline RuleDecision rule_decision(double v_before, double weight, double step, double v_rest) {
  const double lhs = 2.0 * v_before + weight;
  if (lhs < -0.5 * step + 2.0 * v_rest) return RuleDecision::kIncrement;
  if (lhs > 0.5 * step + 2.0 * v_rest) return RuleDecision::kDecrement;
  return RuleDecision::kHold;
}

// Applies the rule to entry (n, k) after neuron k spiked. Codes saturate.
inline RecurrentMatrix learn_on_spike(RecurrentMatrix omega, std::size_t n, std::size_t k,
                                      double v_before_n, const NetworkParams& params) {
  if (n >= omega.size() || k >= omega.size())
    throw ConfigError(fmt::format("neuron index ({}, {}) out of range", n, k));
  omega.apply(n, k, rule_decision(v_before_n, omega.weight(n, k), omega.step(), params.v_rest));
  return omega;
}

struct StepResult {
  NetworkState state;
  std::optional<SpikeEvent> spike;
  Vector v_before;  // voltages at the spike time, before the spike took effect
};

namespace detail {

// One clock tick given the feedforward drive D^T x_t and physical weights.
// Updates `state` in place; returns the index of the spiking neuron, if any.
inline std::optional<std::size_t> advance(NetworkState& state, const NetworkParams& params,
                                          const Vector& drive, const Matrix& weights,
                                          double decay, Vector& v_before) {
  state.t += params.dt;
  state.r *= decay;
  state.v = drive;
  state.v.noalias() += weights * state.r;
  state.v.array() += params.v_rest;
  if (!state.v.allFinite())
    throw DivergedError(0, 0, fmt::format("non-finite membrane potential at t = {}", state.t));

  std::optional<std::size_t> winner;
  double best = 0.0;
  for (Eigen::Index n = 0; n < state.v.size(); ++n) {
    const double margin = state.v(n) - params.thresholds[static_cast<std::size_t>(n)];
    if (margin > best) {
      best = margin;
      winner = static_cast<std::size_t>(n);
    }
  }
  if (winner) {
    v_before = state.v;
    const auto k = static_cast<Eigen::Index>(*winner);
    state.r(k) += 1.0;
    state.v.noalias() = drive;
    state.v.noalias() += weights * state.r;
    state.v.array() += params.v_rest;
  }
  return winner;
}

}  // namespace detail

/// Advances the network by one dt.
///
/// r decays by exp(-lambda dt), V is recomputed, and at most one neuron spikes:
/// the one with the largest positive margin V_n - T_n (lowest index on ties).
/// The spiking neuron's trace then increments by 1 and V is recomputed again.
inline StepResult step(const NetworkState& state, const NetworkParams& params,
                       const DecoderMatrix& d, const RecurrentMatrix& omega, const Vector& x_t) {
  detail::check_shapes(d, omega, x_t.size(), state.r.size());
  if (params.thresholds.size() != d.n_neurons())
    throw ConfigError("thresholds size does not match the decoder");
  StepResult out{state, std::nullopt, {}};
  const Vector drive = d.feedforward() * x_t;
  const auto k = detail::advance(out.state, params, drive, omega.weights(),
                                 std::exp(-params.lambda * params.dt), out.v_before);
  if (k) out.spike = SpikeEvent{*k, out.state.t};
  return out;
}

struct TrainResult {
  RecurrentMatrix omega;
  std::vector<MetricsRow> metrics;
  Matrix first_reconstruction;  // x_hat over the first iteration (n_inputs x T)
  Matrix last_reconstruction;   // x_hat over the last iteration
  NetworkState final_state;
};

/// Runs the signal through the network n_iterations times, learning online.
///
/// On every spike from neuron k the rule is applied to each entry (n, k) in
/// ascending n, using the voltages captured at the spike time. The network
/// state carries over between iterations. Metrics are reported per iteration;
/// frob_dist is measured at the end of the iteration.
inline TrainResult train(const NetworkParams& params, const DecoderMatrix& d,
                         const RecurrentMatrix& omega_init, const Signal& signal,
                         std::size_t n_iterations) {
  params.validate();
  signal.validate();
  if (d.n_neurons() != params.n_neurons || d.n_inputs() != params.n_inputs)
    throw ConfigError("decoder shape does not match network parameters");
  if (omega_init.size() != params.n_neurons)
    throw ConfigError("recurrent matrix size does not match network parameters");
  if (signal.n_channels() != params.n_inputs)
    throw ConfigError(fmt::format("signal has {} channels, network expects {}",
                                  signal.n_channels(), params.n_inputs));
  if (std::abs(signal.dt - params.dt) > 1e-12 * params.dt)
    throw ConfigError(fmt::format("signal dt {} does not match network dt {}", signal.dt,
                                  params.dt));

  TrainResult out{omega_init, {}, {}, {}, NetworkState::zero(params.n_neurons)};
  if (n_iterations == 0) return out;

  const Matrix target = optimal_recurrent(d);
  const Matrix drive = d.feedforward() * signal.samples;  // N x T
  const double decay = std::exp(-params.lambda * params.dt);
  const auto n_steps = signal.samples.cols();
  const auto n = static_cast<Eigen::Index>(params.n_neurons);
  const double duration = static_cast<double>(n_steps) * params.dt;

  RecurrentMatrix& omega = out.omega;
  Matrix weights = omega.weights();
  NetworkState& state = out.final_state;
  Vector v_before(n);
  Vector x_hat(static_cast<Eigen::Index>(params.n_inputs));
  Matrix recon(static_cast<Eigen::Index>(params.n_inputs), n_steps);
  Vector drive_t(n);

  for (std::size_t it = 0; it < n_iterations; ++it) {
    double sq_err = 0.0;
    std::size_t spikes = 0;
    for (Eigen::Index t = 0; t < n_steps; ++t) {
      drive_t = drive.col(t);
      std::optional<std::size_t> k;
      try {
        k = detail::advance(state, params, drive_t, weights, decay, v_before);
      } catch (const DivergedError& e) {
        throw DivergedError(it + 1, static_cast<std::size_t>(t),
                            fmt::format("diverged in iteration {} at step {}: {}", it + 1, t,
                                        e.what()));
      }
      if (k) {
        ++spikes;
        for (std::size_t post = 0; post < params.n_neurons; ++post) {
          const auto decision =
              rule_decision(v_before(static_cast<Eigen::Index>(post)), omega.weight(post, *k),
                            omega.step(), params.v_rest);
          if (omega.apply(post, *k, decision))
            weights(static_cast<Eigen::Index>(post), static_cast<Eigen::Index>(*k)) =
                omega.weight(post, *k);
        }
      }
      x_hat.noalias() = d.entries() * state.r;
      recon.col(t) = x_hat;
      sq_err += (signal.samples.col(t) - x_hat).squaredNorm();
    }
    MetricsRow row;
    row.iteration = it + 1;
    row.rmse = std::sqrt(sq_err / static_cast<double>(signal.samples.size()));
    row.spike_count = spikes;
    row.mean_rate = static_cast<double>(spikes) / (static_cast<double>(n) * duration);
    row.frob_dist = frobenius_distance(omega, target);
    out.metrics.push_back(row);
    if (it == 0) out.first_reconstruction = recon;
    if (it + 1 == n_iterations) out.last_reconstruction = recon;
  }
  return out;
}

}  // namespace ebn
