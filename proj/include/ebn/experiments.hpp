#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "ebn/config.hpp"
#include "ebn/csv.hpp"
#include "ebn/hwmodel.hpp"
#include "ebn/network.hpp"
#include "ebn/signals.hpp"

namespace ebn {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitDiverged = 3 };

// ---------------------------------------------------------------------------
// Network experiment

struct NetworkSetup {
  NetworkParams params;
  DecoderMatrix decoder;
  RecurrentMatrix omega_initial;
  Matrix omega_optimal;
  Signal signal;
};

inline NetworkSetup make_network_setup(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto& nc = cfg.network;
  Rng decoder_rng(cfg.seed, Stream::kDecoder);
  auto decoder = DecoderMatrix::random(nc.n_inputs, nc.n_neurons, nc.decoder_norm, decoder_rng);

  NetworkParams p;
  p.n_neurons = nc.n_neurons;
  p.n_inputs = nc.n_inputs;
  p.dt = nc.dt;
  p.lambda = nc.lambda;
  p.v_rest = nc.v_rest;
  p.seed = cfg.seed;
  p.code_min = nc.code_min;
  p.code_max = nc.code_max;
  p.omega_step = nc.omega_scale * decoder.max_column_norm_sq();
  p.thresholds = nc.thresholds.empty() ? default_thresholds(decoder) : nc.thresholds;
  p.validate();

  Matrix optimal = optimal_recurrent(decoder);
  long long half_range = nc.init_code_range;
  if (half_range < 0)
    half_range = static_cast<long long>(std::llround((optimal / p.omega_step).cwiseAbs().maxCoeff()));
  half_range = std::min<long long>(half_range, std::max(-p.code_min, p.code_max));
  Rng init_rng(cfg.seed, Stream::kInitialWeights);
  auto omega = RecurrentMatrix::random(p.n_neurons, static_cast<int>(half_range), p.omega_step,
                                       init_rng, p.code_min, p.code_max);

  const auto n_steps = static_cast<std::size_t>(std::llround(cfg.signal.duration / nc.dt));
  auto signal = smoothed_noise(nc.n_inputs, n_steps, nc.dt, cfg.signal.noise_sigma,
                               cfg.signal.kernel_sigma, cfg.seed);
  return {std::move(p), std::move(decoder), std::move(omega), std::move(optimal),
          std::move(signal)};
}

struct NetworkRun {
  NetworkSetup setup;
  TrainResult result;
  double initial_frob = 0.0;
};

inline NetworkRun run_network(const ExperimentConfig& cfg) {
  auto setup = make_network_setup(cfg);
  auto result = train(setup.params, setup.decoder, setup.omega_initial, setup.signal,
                      cfg.network.iterations);
  const double frob0 = frobenius_distance(setup.omega_initial, setup.omega_optimal);
  return {std::move(setup), std::move(result), frob0};
}

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<MetricsRow>& rows) {
  auto out = csv::open(path);
  out << "iter,rmse,mean_rate,frob_dist,spike_count\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << csv::number(r.rmse) << ',' << csv::number(r.mean_rate) << ','
        << csv::number(r.frob_dist) << ',' << r.spike_count << '\n';
}

// Columns t, x0.., xhat0.. for one pass over the signal.
inline void write_reconstruction_csv(const std::filesystem::path& path, const Signal& signal,
                                     const Matrix& recon) {
  auto out = csv::open(path);
  out << 't';
  for (std::size_t c = 0; c < signal.n_channels(); ++c) out << ",x" << c;
  for (std::size_t c = 0; c < signal.n_channels(); ++c) out << ",xhat" << c;
  out << '\n';
  for (Eigen::Index t = 0; t < recon.cols(); ++t) {
    out << csv::number(static_cast<double>(t) * signal.dt);
    for (Eigen::Index c = 0; c < signal.samples.rows(); ++c)
      out << ',' << csv::number(signal.samples(c, t));
    for (Eigen::Index c = 0; c < recon.rows(); ++c) out << ',' << csv::number(recon(c, t));
    out << '\n';
  }
}

inline void write_network_outputs(const NetworkRun& run, const std::filesystem::path& dir) {
  write_metrics_csv(dir / "metrics.csv", run.result.metrics);
  csv::write_matrix(dir / "omega_initial.csv", run.setup.omega_initial.weights());
  csv::write_matrix(dir / "omega_final.csv", run.result.omega.weights());
  csv::write_matrix(dir / "omega_optimal.csv", run.setup.omega_optimal);
  if (!run.result.metrics.empty()) {
    write_reconstruction_csv(dir / "reconstruction_first.csv", run.setup.signal,
                             run.result.first_reconstruction);
    write_reconstruction_csv(dir / "reconstruction_last.csv", run.setup.signal,
                             run.result.last_reconstruction);
  }
}

inline std::string network_summary(const NetworkRun& run) {
  const auto& m = run.result.metrics;
  const double frob_final = frobenius_distance(run.result.omega, run.setup.omega_optimal);
  std::string s = fmt::format("network: N={} N_x={} iterations={} omega_step={:.6g}\n",
                              run.setup.params.n_neurons, run.setup.params.n_inputs, m.size(),
                              run.setup.params.omega_step);
  s += fmt::format("  frob_dist  initial={:.6g} final={:.6g} ratio={:.3f}\n", run.initial_frob,
                   frob_final, run.initial_frob > 0 ? frob_final / run.initial_frob : 0.0);
  if (!m.empty()) {
    s += fmt::format("  rmse       first={:.6g} final={:.6g}\n", m.front().rmse, m.back().rmse);
    s += fmt::format("  mean_rate  first={:.6g} Hz final={:.6g} Hz\n", m.front().mean_rate,
                     m.back().mean_rate);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Hardware experiments

struct HwRun {
  hw::TraceLog trace;
  hw::HwReport report;
};

inline HwRun run_hw(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto& r = cfg.hw_run;
  const auto train = regular_spike_train(r.rate_hz, r.duration, r.phase);
  hw::TraceLog trace = cfg.experiment == Experiment::kTwoSynapse
                           ? hw::run_two_synapse(cfg.hw, train, r.fixed_code, r.initial_code)
                           : hw::run_single_synapse(cfg.hw, train, r.initial_code);
  auto report = hw::analyze(trace, cfg.hw);
  return {std::move(trace), report};
}

inline std::string hw_summary(const ExperimentConfig& cfg, const HwRun& run) {
  const auto& r = run.report;
  std::string s = fmt::format("{}: rate={} Hz duration={} s\n", to_string(cfg.experiment),
                              cfg.hw_run.rate_hz, cfg.hw_run.duration);
  if (r.n_updates == 0 && r.settled) {
    s += "  verdict: settled immediately, zero updates\n";
  } else {
    s += fmt::format("  settled within band: {}\n", r.settled ? "yes" : "no");
    s += fmt::format("  settle time: {:.6g} s\n", r.settle_time);
  }
  s += fmt::format("  final weight code: {}\n", r.final_code);
  s += fmt::format("  weight updates: {}  direction changes: {}\n", r.n_updates,
                   r.direction_changes);
  s += fmt::format("  peak i_mem: {:.6g} A (i_rest {:.6g} A)  overshoot: {}\n", r.peak_i_mem,
                   cfg.hw.i_rest, r.overshoot ? "yes" : "no");
  s += fmt::format("  time incrementing: {:.6g} s  decrementing: {:.6g} s\n", r.increment_time,
                   r.decrement_time);
  if (r.non_converged) s += "  NON-CONVERGENCE: weight pinned at a bound outside the band\n";
  return s;
}

// ---------------------------------------------------------------------------

/// Runs one experiment into `dir`: echoes the effective config, writes the
/// CSV outputs and prints a summary. Returns the process exit code.
inline int execute(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                   std::ostream& log) {
  validate(cfg);
  std::filesystem::create_directories(dir);
  {
    auto echo = csv::open(dir / "config.yaml");
    echo << dump_config(cfg);
  }
  if (cfg.experiment == Experiment::kNetwork) {
    std::optional<NetworkRun> run;
    try {
      run = run_network(cfg);
    } catch (const DivergedError& e) {
      log << fmt::format("divergence in iteration {}: {}\n", e.iteration(), e.what());
      return kExitDiverged;
    }
    write_network_outputs(*run, dir);
    log << network_summary(*run);
    return kExitOk;
  }
  const auto run = run_hw(cfg);
  hw::write_csv(dir / "trace.csv", run.trace, cfg.hw_run.trace_stride);
  log << hw_summary(cfg, run);
  return run.report.non_converged ? kExitDiverged : kExitOk;
}

}  // namespace ebn
