// ebn-forge: runs the network, single-synapse and two-synapse experiments.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ebn/ebn.hpp"

namespace {

struct Sweep {
  std::string key;
  long long first = 0;
  long long last = 0;
};

// "key=a..b" with integer bounds, a <= b.
Sweep parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  const auto dots = text.find("..", eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || dots == std::string::npos)
    throw ebn::ConfigError(fmt::format("--sweep expects key=a..b, got '{}'", text));
  Sweep s{text.substr(0, eq)};
  try {
    std::size_t used = 0;
    const auto a = text.substr(eq + 1, dots - eq - 1);
    const auto b = text.substr(dots + 2);
    s.first = std::stoll(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    s.last = std::stoll(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
  } catch (const std::exception&) {
    throw ebn::ConfigError(fmt::format("--sweep bounds must be integers, got '{}'", text));
  }
  if (s.first > s.last) throw ebn::ConfigError("--sweep range is empty");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Efficient balanced network learning: simulation and hardware-model harness",
               "ebn-forge"};
  std::string experiment_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::string out_dir;
  std::string sweep_spec;
  bool dump_defaults = false;

  app.add_option("experiment", experiment_name, "network | single-synapse | two-synapse")
      ->required()
      ->check(CLI::IsMember({"network", "single-synapse", "two-synapse"}));
  app.add_option("--config", config_path, "flat YAML file of dotted keys");
  app.add_option("--seed", seed, "override the config seed");
  app.add_option("--iterations", iterations, "override network.iterations");
  app.add_option("--out", out_dir, "output directory (overrides the config's `out`)");
  app.add_flag("--dump-defaults", dump_defaults, "print every key with its default and exit");
  app.add_option("--sweep", sweep_spec, "run key=a..b as independent concurrent simulations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ebn::kExitConfig;
  }

  ebn::ExperimentConfig cfg;
  try {
    cfg.experiment = *ebn::parse_experiment(experiment_name);
    if (dump_defaults) {
      std::cout << ebn::dump_config(cfg);
      return ebn::kExitOk;
    }
    if (!config_path.empty()) {
      cfg = ebn::load_config(config_path, cfg);
      if (cfg.experiment != *ebn::parse_experiment(experiment_name))
        throw ebn::ConfigError(fmt::format("{}: experiment '{}' does not match subcommand '{}'",
                                           config_path, ebn::to_string(cfg.experiment),
                                           experiment_name));
    }
    if (seed) cfg.seed = *seed;
    if (iterations) cfg.network.iterations = *iterations;
    if (!out_dir.empty()) cfg.out = out_dir;
    ebn::validate(cfg);
  } catch (const ebn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ebn::kExitConfig;
  }

  try {
    if (sweep_spec.empty()) return ebn::execute(cfg, cfg.out, std::cout);

    const auto sweep = parse_sweep(sweep_spec);
    std::vector<ebn::ExperimentConfig> runs;
    for (long long v = sweep.first; v <= sweep.last; ++v) {
      auto c = cfg;
      ebn::set_key(c, sweep.key, std::to_string(v));
      c.out = (std::filesystem::path(cfg.out) / fmt::format("{}={}", sweep.key, v)).string();
      ebn::validate(c);
      runs.push_back(std::move(c));
    }
    std::vector<std::future<std::pair<int, std::string>>> jobs;
    for (const auto& c : runs)
      jobs.push_back(std::async(std::launch::async, [&c] {
        std::ostringstream log;
        const int code = ebn::execute(c, c.out, log);
        return std::make_pair(code, log.str());
      }));
    int worst = ebn::kExitOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      auto [code, text] = jobs[i].get();
      std::cout << "[" << runs[i].out << "]\n" << text;
      worst = std::max(worst, code);
    }
    return worst;
  } catch (const ebn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ebn::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
