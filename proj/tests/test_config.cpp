#include <string>

#include <gtest/gtest.h>

#include "ebn/ebn.hpp"

using namespace ebn;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, {}, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyTextKeepsDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(dump_config(c), dump_config(ExperimentConfig{}));
}

TEST(Config, ParsesDottedKeys) {
  const auto c = parse_config(
      "experiment: two-synapse\nseed: 9\nnetwork.n_neurons: 2\nhw.i_sl: 2e-9\n"
      "network.thresholds: [0.1, 0.2]\nhw.i_leak_target: 1e-9\n");
  EXPECT_EQ(c.experiment, Experiment::kTwoSynapse);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.network.n_neurons, 2u);
  EXPECT_DOUBLE_EQ(c.hw.i_sl, 2e-9);
  ASSERT_EQ(c.network.thresholds.size(), 2u);
  EXPECT_DOUBLE_EQ(c.network.thresholds[1], 0.2);
  ASSERT_TRUE(c.hw.i_leak_target);
  EXPECT_DOUBLE_EQ(*c.hw.i_leak_target, 1e-9);
}

TEST(Config, UnknownKeyReportsLine) {
  const auto msg = error_of("seed: 3\n\nnetwork.n_neurns: 5\n");
  EXPECT_NE(msg.find("cfg.yaml:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("network.n_neurns"), std::string::npos) << msg;
}

TEST(Config, TypeErrorReportsLine) {
  const auto msg = error_of("seed: 3\nnetwork.dt: fast\n");
  EXPECT_NE(msg.find("cfg.yaml:2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("network.dt"), std::string::npos) << msg;
  EXPECT_NE(error_of("network.n_neurons: 2.5\n"), "");
  EXPECT_NE(error_of("network.iterations: -1\n"), "");
  EXPECT_NE(error_of("experiment: bogus\n"), "");
}

TEST(Config, DuplicateKeyRejected) {
  const auto msg = error_of("seed: 3\nseed: 4\n");
  EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("cfg.yaml:2"), std::string::npos) << msg;
}

TEST(Config, ValidationFailureReportsLine) {
  const auto msg = error_of("seed: 3\nhw.tau_mem: -1\n");
  EXPECT_NE(msg.find("cfg.yaml:2"), std::string::npos) << msg;
  EXPECT_NE(error_of("network.thresholds: [0.1]\n"), "");
  EXPECT_NE(error_of("hw.i_reset: 6e-8\n"), "");
  EXPECT_NE(error_of("hw.fixed_code: 64\n"), "");
  EXPECT_NE(error_of("network.omega_scale: 0\n"), "");
}

TEST(Config, NonMappingRejected) {
  EXPECT_NE(error_of("- a\n- b\n"), "");
  EXPECT_NE(error_of("seed: [1\n"), "");
}

TEST(Config, DumpRoundTrips) {
  ExperimentConfig c;
  c.experiment = Experiment::kSingleSynapse;
  c.seed = 77;
  c.network.thresholds = {0.1, 0.25, 1e-7};
  c.network.n_neurons = 3;
  c.hw.i_leak_target = 3.3e-9;
  c.hw.gain = 123.456;
  c.signal.kernel_sigma = 1.0 / 3.0;
  const auto text = dump_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.signal.kernel_sigma, 1.0 / 3.0);
  EXPECT_EQ(parse_config(dump_config(ExperimentConfig{})).network.thresholds.size(), 0u);
}

TEST(Config, SetKeyOverrides) {
  ExperimentConfig c;
  set_key(c, "seed", "12");
  EXPECT_EQ(c.seed, 12u);
  EXPECT_THROW(set_key(c, "nope", "1"), ConfigError);
  EXPECT_THROW(set_key(c, "seed", "x"), ConfigError);
}

TEST(Config, ExperimentNames) {
  for (auto e : {Experiment::kNetwork, Experiment::kSingleSynapse, Experiment::kTwoSynapse})
    EXPECT_EQ(parse_experiment(to_string(e)), e);
  EXPECT_FALSE(parse_experiment("three-synapse"));
}
