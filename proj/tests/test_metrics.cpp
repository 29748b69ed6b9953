#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "ebn/ebn.hpp"
#include "oracles.hpp"

using namespace ebn;

namespace {

oracle::Mat to_rows(const Matrix& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()),
                  std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

}  // namespace

TEST(Rmse, IdenticalIsZero) {
  const Matrix a = Matrix::Random(3, 50);
  EXPECT_EQ(rmse(a, a), 0.0);
}

TEST(Rmse, ConstantOffset) {
  const Matrix a = Matrix::Random(2, 40);
  const Matrix b = a.array() + 0.5;
  EXPECT_NEAR(rmse(a, b), 0.5, 1e-15);
}

TEST(Rmse, MatchesTwoPassLoop) {
  Rng rng(1);
  Matrix a(4, 123), b(4, 123);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = rng.normal();
    b(i) = rng.normal();
  }
  EXPECT_NEAR(rmse(a, b), oracle::rmse(to_rows(a), to_rows(b)), 1e-13);
  EXPECT_THROW(rmse(a, Matrix::Zero(4, 122)), ConfigError);
}

TEST(Frobenius, ZeroAtOwnWeightsAndMatchesLoop) {
  Rng rng(2);
  const auto omega = RecurrentMatrix::random(6, 30, 0.01, rng);
  EXPECT_EQ(frobenius_distance(omega, omega.weights()), 0.0);
  Matrix target(6, 6);
  for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = rng.normal();
  EXPECT_NEAR(frobenius_distance(omega, target),
              oracle::frobenius(to_rows(omega.weights()), to_rows(target)), 1e-13);
  EXPECT_THROW(frobenius_distance(omega, Matrix::Zero(5, 5)), ConfigError);
}

TEST(Frobenius, PermutationCovariant) {
  Rng rng(3);
  const auto omega = RecurrentMatrix::random(5, 30, 0.01, rng);
  Matrix target(5, 5);
  for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = rng.normal();
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
  perm.indices() << 3, 0, 4, 1, 2;
  const CodeMatrix pc = perm * omega.codes() * perm.transpose();
  const RecurrentMatrix permuted(pc, omega.step(), omega.code_min(), omega.code_max());
  const Matrix pt = perm * target * perm.transpose();
  EXPECT_NEAR(frobenius_distance(permuted, pt), frobenius_distance(omega, target), 1e-13);
}

TEST(MeanRate, HundredSpikesTwentyNeuronsOneSecond) {
  std::vector<SpikeEvent> spikes;
  for (std::size_t i = 0; i < 100; ++i) spikes.push_back({i % 20, 0.01 * i});
  EXPECT_DOUBLE_EQ(mean_rate(spikes, 20, 1.0), 5.0);
}

TEST(MeanRate, EqualsAverageOfPerNeuronRates) {
  Rng rng(4);
  std::vector<SpikeEvent> spikes;
  std::vector<double> counts(7, 0.0);
  for (int i = 0; i < 333; ++i) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(0, 6));
    spikes.push_back({n, rng.uniform() * 2.0});
    counts[n] += 1.0;
  }
  double avg = 0.0;
  for (double c : counts) avg += c / 2.0;
  avg /= 7.0;
  EXPECT_NEAR(mean_rate(spikes, 7, 2.0), avg, 1e-12);
}

TEST(MeanRate, RejectsBadArguments) {
  std::vector<SpikeEvent> none;
  EXPECT_THROW(mean_rate(none, 0, 1.0), ConfigError);
  EXPECT_THROW(mean_rate(none, 3, 0.0), ConfigError);
  EXPECT_EQ(mean_rate(none, 3, 1.0), 0.0);
}
