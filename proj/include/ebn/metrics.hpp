#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "ebn/error.hpp"
#include "ebn/types.hpp"

namespace ebn {

struct MetricsRow {
  std::size_t iteration = 0;
  double rmse = 0.0;
  double mean_rate = 0.0;   // Hz
  double frob_dist = 0.0;   // ||Omega - (-D^T D)||_F
  std::size_t spike_count = 0;
};

// Root mean squared elementwise difference over every channel and step.
inline double rmse(const Matrix& signal, const Matrix& reconstruction) {
  if (signal.rows() != reconstruction.rows() || signal.cols() != reconstruction.cols())
    throw ConfigError(fmt::format("rmse: shape mismatch {}x{} vs {}x{}", signal.rows(),
                                  signal.cols(), reconstruction.rows(), reconstruction.cols()));
  if (signal.size() == 0) return 0.0;
  return std::sqrt((signal - reconstruction).squaredNorm() / static_cast<double>(signal.size()));
}

// Distance in physical units (code * step) to a real-valued target.
inline double frobenius_distance(const RecurrentMatrix& omega, const Matrix& target) {
  const auto n = static_cast<Eigen::Index>(omega.size());
  if (target.rows() != n || target.cols() != n)
    throw ConfigError(fmt::format("frobenius_distance: shape mismatch {}x{} vs {}x{}", n, n,
                                  target.rows(), target.cols()));
  return (omega.weights() - target).norm();
}

inline double mean_rate(std::span<const SpikeEvent> spikes, std::size_t n_neurons,
                        double duration) {
  if (!(duration > 0.0)) throw ConfigError("mean_rate: duration must be > 0");
  if (n_neurons == 0) throw ConfigError("mean_rate: n_neurons must be >= 1");
  return static_cast<double>(spikes.size()) / (static_cast<double>(n_neurons) * duration);
}

}  // namespace ebn
