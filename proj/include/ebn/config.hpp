#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "ebn/csv.hpp"
#include "ebn/error.hpp"
#include "ebn/hwmodel.hpp"

namespace ebn {

enum class Experiment { kNetwork, kSingleSynapse, kTwoSynapse };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::kNetwork: return "network";
    case Experiment::kSingleSynapse: return "single-synapse";
    case Experiment::kTwoSynapse: return "two-synapse";
  }
  return "?";
}

inline std::optional<Experiment> parse_experiment(std::string_view s) {
  if (s == "network") return Experiment::kNetwork;
  if (s == "single-synapse") return Experiment::kSingleSynapse;
  if (s == "two-synapse") return Experiment::kTwoSynapse;
  return std::nullopt;
}

struct NetworkConfig {
  std::size_t n_neurons = 20;
  std::size_t n_inputs = 2;
  std::size_t iterations = 50;
  double dt = 1e-4;
  double lambda = 50.0;
  double v_rest = 0.0;
  double decoder_norm = 0.03;   // column norm of the random decoder
  double omega_scale = 0.01;    // omega_step = omega_scale * max_n ||D_n||^2
  std::vector<double> thresholds;  // empty: ||D_n||^2 / 2
  long long init_code_range = -1;  // random initial codes in [-r, r]; < 0 picks the optimum's span
  int code_min = NetworkCodeRange::kMin;
  int code_max = NetworkCodeRange::kMax;
};

struct SignalConfig {
  double duration = 1.0;        // s per training iteration
  double noise_sigma = 1.0;
  double kernel_sigma = 5e-3;   // s
};

struct HwRunConfig {
  double rate_hz = 100.0;
  double duration = 2.0;
  double phase = 0.0;
  int fixed_code = 60;          // two-synapse experiment only
  int initial_code = 0;
  std::size_t trace_stride = 10;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kNetwork;
  std::uint64_t seed = 1;
  std::string out = "out";
  NetworkConfig network;
  SignalConfig signal;
  hw::HwParams hw;
  HwRunConfig hw_run;
};

namespace detail {

// A value failed validation; `key` lets the loader report the source line.
struct KeyError {
  std::string key;
  std::string message;
};

struct KeySpec {
  std::string name;
  std::function<void(ExperimentConfig&, const YAML::Node&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T scalar_as(const YAML::Node& node, std::string_view type_name) {
  if (!node.IsScalar()) throw std::invalid_argument(fmt::format("expected {}", type_name));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw std::invalid_argument(fmt::format("expected {}, got '{}'", type_name, node.Scalar()));
  }
}

inline double as_real(const YAML::Node& n) { return scalar_as<double>(n, "a number"); }

inline long long as_integer(const YAML::Node& n) { return scalar_as<long long>(n, "an integer"); }

inline std::size_t as_count(const YAML::Node& n) {
  const long long v = as_integer(n);
  if (v < 0) throw std::invalid_argument(fmt::format("expected a non-negative integer, got {}", v));
  return static_cast<std::size_t>(v);
}

inline int as_int(const YAML::Node& n) {
  const long long v = as_integer(n);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw std::invalid_argument("integer out of range");
  return static_cast<int>(v);
}

inline std::string num(double v) { return csv::number(v); }

template <typename Field, typename Parse, typename Show>
KeySpec key(std::string name, Field field, Parse parse, Show show) {
  return {std::move(name),
          [field, parse](ExperimentConfig& c, const YAML::Node& n) { field(c) = parse(n); },
          [field, show](const ExperimentConfig& c) {
            return show(field(const_cast<ExperimentConfig&>(c)));
          }};
}

inline const std::vector<KeySpec>& key_specs() {
  using C = ExperimentConfig;
  auto real = [](std::string k, auto field) { return key(std::move(k), field, as_real, num); };
  auto count = [](std::string k, auto field) {
    return key(std::move(k), field, as_count, [](std::size_t v) { return std::to_string(v); });
  };
  auto integer = [](std::string k, auto field) {
    return key(std::move(k), field, as_int, [](int v) { return std::to_string(v); });
  };
  static const std::vector<KeySpec> specs = {
      key("experiment", [](C& c) -> Experiment& { return c.experiment; },
          [](const YAML::Node& n) {
            const auto s = scalar_as<std::string>(n, "an experiment name");
            const auto e = parse_experiment(s);
            if (!e)
              throw std::invalid_argument(
                  fmt::format("unknown experiment '{}' (network, single-synapse, two-synapse)", s));
            return *e;
          },
          [](Experiment e) { return std::string(to_string(e)); }),
      key("seed", [](C& c) -> std::uint64_t& { return c.seed; },
          [](const YAML::Node& n) { return static_cast<std::uint64_t>(as_count(n)); },
          [](std::uint64_t v) { return std::to_string(v); }),
      key("out", [](C& c) -> std::string& { return c.out; },
          [](const YAML::Node& n) { return scalar_as<std::string>(n, "a path"); },
          [](const std::string& s) { return YAML::Dump(YAML::Node(s)); }),

      count("network.n_neurons", [](C& c) -> std::size_t& { return c.network.n_neurons; }),
      count("network.n_inputs", [](C& c) -> std::size_t& { return c.network.n_inputs; }),
      count("network.iterations", [](C& c) -> std::size_t& { return c.network.iterations; }),
      real("network.dt", [](C& c) -> double& { return c.network.dt; }),
      real("network.lambda", [](C& c) -> double& { return c.network.lambda; }),
      real("network.v_rest", [](C& c) -> double& { return c.network.v_rest; }),
      real("network.decoder_norm", [](C& c) -> double& { return c.network.decoder_norm; }),
      real("network.omega_scale", [](C& c) -> double& { return c.network.omega_scale; }),
      key("network.thresholds", [](C& c) -> std::vector<double>& { return c.network.thresholds; },
          [](const YAML::Node& n) {
            if (n.IsNull()) return std::vector<double>{};
            if (!n.IsSequence()) throw std::invalid_argument("expected a list of numbers");
            std::vector<double> out;
            for (const auto& item : n) out.push_back(as_real(item));
            return out;
          },
          [](const std::vector<double>& v) {
            std::string s = "[";
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
            return s + "]";
          }),
      key("network.init_code_range", [](C& c) -> long long& { return c.network.init_code_range; },
          as_integer, [](long long v) { return std::to_string(v); }),
      integer("network.code_min", [](C& c) -> int& { return c.network.code_min; }),
      integer("network.code_max", [](C& c) -> int& { return c.network.code_max; }),

      real("signal.duration", [](C& c) -> double& { return c.signal.duration; }),
      real("signal.noise_sigma", [](C& c) -> double& { return c.signal.noise_sigma; }),
      real("signal.kernel_sigma", [](C& c) -> double& { return c.signal.kernel_sigma; }),

      real("hw.i_rest", [](C& c) -> double& { return c.hw.i_rest; }),
      real("hw.i_reset", [](C& c) -> double& { return c.hw.i_reset; }),
      real("hw.i_sl", [](C& c) -> double& { return c.hw.i_sl; }),
      real("hw.i_unit", [](C& c) -> double& { return c.hw.i_unit; }),
      real("hw.pulse_width", [](C& c) -> double& { return c.hw.pulse_width; }),
      real("hw.tau_dpi", [](C& c) -> double& { return c.hw.tau_dpi; }),
      real("hw.tau_mem", [](C& c) -> double& { return c.hw.tau_mem; }),
      real("hw.gain", [](C& c) -> double& { return c.hw.gain; }),
      real("hw.dt", [](C& c) -> double& { return c.hw.dt; }),
      key("hw.i_leak_target", [](C& c) -> std::optional<double>& { return c.hw.i_leak_target; },
          [](const YAML::Node& n) -> std::optional<double> {
            if (n.IsNull()) return std::nullopt;
            return as_real(n);
          },
          [](const std::optional<double>& v) { return v ? num(*v) : std::string("~"); }),
      real("hw.rate_hz", [](C& c) -> double& { return c.hw_run.rate_hz; }),
      real("hw.duration", [](C& c) -> double& { return c.hw_run.duration; }),
      real("hw.phase", [](C& c) -> double& { return c.hw_run.phase; }),
      integer("hw.fixed_code", [](C& c) -> int& { return c.hw_run.fixed_code; }),
      integer("hw.initial_code", [](C& c) -> int& { return c.hw_run.initial_code; }),
      count("hw.trace_stride", [](C& c) -> std::size_t& { return c.hw_run.trace_stride; }),
  };
  return specs;
}

inline const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_specs())
    if (k.name == name) return &k;
  return nullptr;
}

inline void check(bool ok, std::string key, std::string message) {
  if (!ok) throw KeyError{std::move(key), std::move(message)};
}

inline void validate_keys(const ExperimentConfig& c) {
  const auto& n = c.network;
  check(n.n_neurons >= 1, "network.n_neurons", "must be >= 1");
  check(n.n_inputs >= 1, "network.n_inputs", "must be >= 1");
  check(n.dt > 0.0 && std::isfinite(n.dt), "network.dt", "must be > 0");
  check(n.lambda > 0.0 && std::isfinite(n.lambda), "network.lambda", "must be > 0");
  check(std::isfinite(n.v_rest), "network.v_rest", "must be finite");
  check(n.decoder_norm > 0.0 && std::isfinite(n.decoder_norm), "network.decoder_norm",
        "must be > 0");
  check(n.omega_scale > 0.0 && std::isfinite(n.omega_scale), "network.omega_scale", "must be > 0");
  check(n.thresholds.empty() || n.thresholds.size() == n.n_neurons, "network.thresholds",
        fmt::format("must be empty or have n_neurons = {} entries", n.n_neurons));
  for (double t : n.thresholds) check(std::isfinite(t), "network.thresholds", "must be finite");
  check(n.code_min <= 0, "network.code_min", "must be <= 0");
  check(n.code_max >= 0 && n.code_max > n.code_min, "network.code_max",
        "must be >= 0 and > code_min");

  check(c.signal.duration > 0.0, "signal.duration", "must be > 0");
  check(c.signal.noise_sigma >= 0.0 && std::isfinite(c.signal.noise_sigma), "signal.noise_sigma",
        "must be >= 0");
  check(c.signal.kernel_sigma > 0.0, "signal.kernel_sigma", "must be > 0");
  check(std::llround(c.signal.duration / n.dt) >= 1, "signal.duration", "shorter than one dt");

  const auto& h = c.hw;
  check(h.i_rest >= 0.0, "hw.i_rest", "must be >= 0");
  check(h.i_reset >= 0.0 && h.i_reset < h.i_rest, "hw.i_reset", "must be >= 0 and < hw.i_rest");
  check(h.i_sl >= 0.0, "hw.i_sl", "must be >= 0");
  check(h.i_unit >= 0.0, "hw.i_unit", "must be >= 0");
  check(h.pulse_width > 0.0, "hw.pulse_width", "must be > 0");
  check(h.tau_dpi > 0.0, "hw.tau_dpi", "must be > 0");
  check(h.tau_mem > 0.0, "hw.tau_mem", "must be > 0");
  check(std::isfinite(h.gain), "hw.gain", "must be finite");
  check(h.dt > 0.0, "hw.dt", "must be > 0");
  check(!h.i_leak_target || *h.i_leak_target >= 0.0, "hw.i_leak_target", "must be >= 0");

  const auto& r = c.hw_run;
  check(r.rate_hz > 0.0, "hw.rate_hz", "must be > 0");
  check(r.duration > 0.0, "hw.duration", "must be > 0");
  check(r.phase >= 0.0, "hw.phase", "must be >= 0");
  check(r.fixed_code >= 0 && r.fixed_code <= hw::kCodeMax, "hw.fixed_code",
        fmt::format("must be in [0, {}]", hw::kCodeMax));
  check(r.initial_code >= hw::kCodeMin && r.initial_code <= hw::kCodeMax, "hw.initial_code",
        fmt::format("must be in [{}, {}]", hw::kCodeMin, hw::kCodeMax));
  check(r.trace_stride >= 1, "hw.trace_stride", "must be >= 1");
}

}  // namespace detail

// Throws ConfigError naming the offending key.
inline void validate(const ExperimentConfig& c) {
  try {
    detail::validate_keys(c);
  } catch (const detail::KeyError& e) {
    throw ConfigError(fmt::format("{}: {}", e.key, e.message));
  }
}

// Sets one dotted key from YAML scalar text (used by CLI overrides).
inline void set_key(ExperimentConfig& c, std::string_view name, const std::string& value) {
  const auto* spec = detail::find_key(name);
  if (!spec) throw ConfigError(fmt::format("unknown key '{}'", name));
  try {
    spec->set(c, YAML::Load(value));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.what()));
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", name, e.msg));
  }
}

/// Parses a flat YAML mapping of dotted keys on top of `base`.
///
/// Unknown or repeated keys and ill-typed values are rejected with the line of
/// the offending entry; `source` names the file in messages.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {},
                                     const std::string& source = "<config>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  if (root.IsNull()) return base;
  if (!root.IsMap()) throw ConfigError(fmt::format("{}: expected a mapping of keys", source));

  std::map<std::string, int> lines;
  for (const auto& entry : root) {
    const int line = entry.first.Mark().line + 1;
    const auto name = entry.first.as<std::string>();
    const auto* spec = detail::find_key(name);
    if (!spec) throw ConfigError(fmt::format("{}:{}: unknown key '{}'", source, line, name));
    if (!lines.emplace(name, line).second)
      throw ConfigError(fmt::format("{}:{}: duplicate key '{}'", source, line, name));
    try {
      spec->set(base, entry.second);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("{}:{}: {}: {}", source, line, name, e.what()));
    }
  }
  try {
    detail::validate_keys(base);
  } catch (const detail::KeyError& e) {
    const auto it = lines.find(e.key);
    if (it != lines.end())
      throw ConfigError(fmt::format("{}:{}: {}: {}", source, it->second, e.key, e.message));
    throw ConfigError(fmt::format("{}: {}: {}", source, e.key, e.message));
  }
  return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base), path.string());
}

// Every key with its effective value, one `key: value` per line.
inline std::string dump_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& spec : detail::key_specs()) out += spec.name + ": " + spec.get(c) + "\n";
  return out;
}

}  // namespace ebn
