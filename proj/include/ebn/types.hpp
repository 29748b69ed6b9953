#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "ebn/error.hpp"
#include "ebn/rng.hpp"

namespace ebn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CodeMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Signed range of an n-bit two's complement register.
template <int Bits>
struct SignedRegister {
  static_assert(Bits >= 2 && Bits <= 31);
  static constexpr int kMin = -(1 << (Bits - 1));
  static constexpr int kMax = (1 << (Bits - 1)) - 1;

  static constexpr int saturate(long long value) noexcept {
    return static_cast<int>(std::clamp<long long>(value, kMin, kMax));
  }
};

// Hardware weight register.
using WeightRegister = SignedRegister<7>;
// Default code range of the ideal network model.
using NetworkCodeRange = SignedRegister<8>;

// Outcome of one evaluation of the discrete learning rule.
enum class RuleDecision { kIncrement, kDecrement, kHold };

inline std::string_view to_string(RuleDecision d) {
  switch (d) {
    case RuleDecision::kIncrement: return "inc";
    case RuleDecision::kDecrement: return "dec";
    case RuleDecision::kHold: return "hold";
  }
  return "?";
}

struct SpikeEvent {
  std::size_t neuron = 0;
  double time = 0.0;

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

struct NetworkParams {
  std::size_t n_neurons = 20;
  std::size_t n_inputs = 2;
  double dt = 1e-4;           // s
  double lambda = 50.0;       // 1/s, decay rate of the filtered spike trains
  double omega_step = 0.0;    // voltage per weight code
  double v_rest = 0.0;
  std::vector<double> thresholds;
  std::uint64_t seed = 1;
  int code_min = NetworkCodeRange::kMin;
  int code_max = NetworkCodeRange::kMax;

  void validate() const {
    if (n_neurons < 1) throw ConfigError("n_neurons must be >= 1");
    if (n_inputs < 1) throw ConfigError("n_inputs must be >= 1");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
    if (!(omega_step > 0.0) || !std::isfinite(omega_step))
      throw ConfigError("omega_step must be > 0");
    if (!std::isfinite(v_rest)) throw ConfigError("v_rest must be finite");
    if (thresholds.size() != n_neurons)
      throw ConfigError(fmt::format("thresholds has {} entries, expected {}", thresholds.size(),
                                    n_neurons));
    for (double t : thresholds)
      if (!std::isfinite(t)) throw ConfigError("thresholds must be finite");
    if (code_min > 0 || code_max < 0 || code_min >= code_max)
      throw ConfigError("code range must satisfy code_min <= 0 <= code_max, code_min < code_max");
  }
};

/// Linear readout D (n_inputs x n_neurons). The feedforward weights are its
/// transpose and are never stored separately.
class DecoderMatrix {
 public:
  explicit DecoderMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.cols() < 1) throw ConfigError("decoder must be non-empty");
    if (!entries_.allFinite()) throw ConfigError("decoder entries must be finite");
    for (Eigen::Index n = 0; n < entries_.cols(); ++n)
      if (!(entries_.col(n).norm() > 0.0))
        throw ConfigError(fmt::format("decoder column {} has zero norm", n));
  }

  // Gaussian directions scaled to a common column norm.
  static DecoderMatrix random(std::size_t n_inputs, std::size_t n_neurons, double column_norm,
                              Rng& rng) {
    if (!(column_norm > 0.0)) throw ConfigError("decoder column norm must be > 0");
    Matrix d(static_cast<Eigen::Index>(n_inputs), static_cast<Eigen::Index>(n_neurons));
    for (Eigen::Index n = 0; n < d.cols(); ++n) {
      double norm = 0.0;
      while (!(norm > 0.0)) {
        for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, n) = rng.normal();
        norm = d.col(n).norm();
      }
      d.col(n) *= column_norm / norm;
    }
    return DecoderMatrix(std::move(d));
  }

  const Matrix& entries() const noexcept { return entries_; }
  std::size_t n_inputs() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t n_neurons() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  auto feedforward() const { return entries_.transpose(); }

  double column_norm_sq(std::size_t n) const {
    return entries_.col(static_cast<Eigen::Index>(n)).squaredNorm();
  }

  double max_column_norm_sq() const { return entries_.colwise().squaredNorm().maxCoeff(); }

 private:
  Matrix entries_;
};

/// Discrete recurrent weights. The physical weight of entry (n, k) is always
/// codes(n, k) * step; only the integer codes are stored.
class RecurrentMatrix {
 public:
  RecurrentMatrix(CodeMatrix codes, double step, int code_min = NetworkCodeRange::kMin,
                  int code_max = NetworkCodeRange::kMax)
      : codes_(std::move(codes)), step_(step), code_min_(code_min), code_max_(code_max) {
    if (codes_.rows() != codes_.cols()) throw ConfigError("recurrent matrix must be square");
    if (!(step_ > 0.0) || !std::isfinite(step_)) throw ConfigError("omega_step must be > 0");
    if (code_min_ >= code_max_) throw ConfigError("invalid code range");
    if (codes_.size() > 0 && (codes_.minCoeff() < code_min_ || codes_.maxCoeff() > code_max_))
      throw ConfigError("recurrent code outside configured range");
  }

  // Nearest code to each target weight, saturated to the code range.
  static RecurrentMatrix nearest(const Matrix& target, double step,
                                 int code_min = NetworkCodeRange::kMin,
                                 int code_max = NetworkCodeRange::kMax) {
    CodeMatrix codes(target.rows(), target.cols());
    for (Eigen::Index n = 0; n < target.rows(); ++n)
      for (Eigen::Index k = 0; k < target.cols(); ++k) {
        const double c = std::round(target(n, k) / step);
        codes(n, k) = static_cast<int>(std::clamp<double>(c, code_min, code_max));
      }
    return RecurrentMatrix(std::move(codes), step, code_min, code_max);
  }

  // Codes drawn uniformly from [-half_range, half_range] (clipped to the range).
  static RecurrentMatrix random(std::size_t n, int half_range, double step, Rng& rng,
                                int code_min = NetworkCodeRange::kMin,
                                int code_max = NetworkCodeRange::kMax) {
    const int lo = std::max(-half_range, code_min);
    const int hi = std::min(half_range, code_max);
    CodeMatrix codes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < codes.rows(); ++i)
      for (Eigen::Index j = 0; j < codes.cols(); ++j)
        codes(i, j) = static_cast<int>(rng.uniform_int(lo, hi));
    return RecurrentMatrix(std::move(codes), step, code_min, code_max);
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(codes_.rows()); }
  double step() const noexcept { return step_; }
  int code_min() const noexcept { return code_min_; }
  int code_max() const noexcept { return code_max_; }
  const CodeMatrix& codes() const noexcept { return codes_; }

  int code(std::size_t n, std::size_t k) const {
    return codes_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  }
  double weight(std::size_t n, std::size_t k) const { return code(n, k) * step_; }
  Matrix weights() const { return codes_.cast<double>() * step_; }

  // Saturating counter step; returns true if the code changed.
  bool apply(std::size_t n, std::size_t k, RuleDecision decision) {
    int& c = codes_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    const int before = c;
    if (decision == RuleDecision::kIncrement) c = std::min(c + 1, code_max_);
    if (decision == RuleDecision::kDecrement) c = std::max(c - 1, code_min_);
    return c != before;
  }

  friend bool operator==(const RecurrentMatrix& a, const RecurrentMatrix& b) {
    return a.step_ == b.step_ && a.code_min_ == b.code_min_ && a.code_max_ == b.code_max_ &&
           a.codes_.rows() == b.codes_.rows() && a.codes_ == b.codes_;
  }

 private:
  CodeMatrix codes_;
  double step_;
  int code_min_;
  int code_max_;
};

struct NetworkState {
  Vector r;       // filtered spike trains
  Vector v;       // membrane potentials, cached from the voltage equation
  double t = 0.0;

  static NetworkState zero(std::size_t n_neurons) {
    const auto n = static_cast<Eigen::Index>(n_neurons);
    return {Vector::Zero(n), Vector::Zero(n), 0.0};
  }
};

}  // namespace ebn
