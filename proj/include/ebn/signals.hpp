#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include "ebn/csv.hpp"
#include "ebn/error.hpp"
#include "ebn/rng.hpp"
#include "ebn/types.hpp"

namespace ebn {

struct Signal {
  Matrix samples;   // n_channels x n_steps
  double dt = 1e-4;

  std::size_t n_channels() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t n_steps() const { return static_cast<std::size_t>(samples.cols()); }
  double duration() const { return static_cast<double>(n_steps()) * dt; }

  void validate() const {
    if (samples.rows() < 1 || samples.cols() < 1) throw ConfigError("signal must be non-empty");
    if (!(dt > 0.0)) throw ConfigError("signal dt must be > 0");
    if (!samples.allFinite()) throw ConfigError("signal samples must be finite");
  }
};

struct SpikeTrain {
  std::vector<double> times;  // strictly increasing, in [0, duration)
  double duration = 0.0;
};

// Normalized Gaussian kernel truncated at +-4 sigma.
inline std::vector<double> gaussian_kernel(double sigma_samples) {
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_samples));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    const double u = static_cast<double>(j) / sigma_samples;
    k[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * u * u);
    sum += k[static_cast<std::size_t>(j + half)];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Reflect index into [0, n) without repeating the edge sample.
inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Convolves `samples` with a symmetric odd-length kernel, reflect-padded.
inline std::vector<double> smooth(std::span<const double> samples, std::span<const double> kernel) {
  if (kernel.size() % 2 == 0) throw ConfigError("smoothing kernel must have odd length");
  if (kernel.size() > samples.size())
    throw ConfigError(fmt::format(
        "smoothing kernel ({} samples) is wider than the signal ({} samples)", kernel.size(),
        samples.size()));
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<double> out(samples.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j)
      acc += kernel[static_cast<std::size_t>(j + half)] *
             samples[static_cast<std::size_t>(reflect_index(t - j, n))];
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

/// Gaussian-smoothed white noise.
///
/// Each channel draws i.i.d. N(0, noise_sigma^2) samples and convolves them
/// with a unit-sum Gaussian kernel of width kernel_sigma_seconds, truncated at
/// +-4 sigma. Boundaries are reflect-padded so the output has no start-up
/// transient.
inline Signal smoothed_noise(std::size_t n_channels, std::size_t n_steps, double dt,
                             double noise_sigma, double kernel_sigma_seconds,
                             std::uint64_t seed) {
  if (n_channels < 1 || n_steps < 1) throw ConfigError("signal shape must be non-empty");
  if (!(dt > 0.0)) throw ConfigError("signal dt must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ConfigError("noise_sigma must be >= 0");
  if (!(kernel_sigma_seconds > 0.0)) throw ConfigError("kernel_sigma must be > 0");

  const auto kernel = gaussian_kernel(kernel_sigma_seconds / dt);
  if (kernel.size() > n_steps)
    throw ConfigError(fmt::format(
        "smoothing kernel ({} samples) is wider than the signal ({} samples)", kernel.size(),
        n_steps));

  Rng rng(seed, Stream::kSignal);
  Signal out{Matrix(static_cast<Eigen::Index>(n_channels), static_cast<Eigen::Index>(n_steps)),
             dt};
  std::vector<double> white(n_steps);
  for (std::size_t c = 0; c < n_channels; ++c) {
    for (double& w : white) w = noise_sigma * rng.normal();
    const auto smoothed = smooth(white, kernel);
    for (std::size_t t = 0; t < n_steps; ++t)
      out.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = smoothed[t];
  }
  return out;
}

// Spikes at phase + i / rate_hz for every i with time < duration.
inline SpikeTrain regular_spike_train(double rate_hz, double duration, double phase = 0.0) {
  if (!(rate_hz > 0.0)) throw ConfigError("rate_hz must be > 0");
  if (!(phase >= 0.0)) throw ConfigError("phase must be >= 0");
  SpikeTrain train{{}, duration};
  for (std::size_t i = 0;; ++i) {
    const double t = phase + static_cast<double>(i) / rate_hz;
    if (!(t < duration)) break;
    train.times.push_back(t);
  }
  return train;
}

// Header `t,ch0,ch1,...`, one row per sample.
inline void write_csv(std::ostream& out, const Signal& s) {
  out << 't';
  for (std::size_t c = 0; c < s.n_channels(); ++c) out << ",ch" << c;
  out << '\n';
  for (Eigen::Index t = 0; t < s.samples.cols(); ++t) {
    out << csv::number(static_cast<double>(t) * s.dt);
    for (Eigen::Index c = 0; c < s.samples.rows(); ++c) out << ',' << csv::number(s.samples(c, t));
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const Signal& s) {
  auto out = csv::open(path);
  write_csv(out, s);
}

}  // namespace ebn
