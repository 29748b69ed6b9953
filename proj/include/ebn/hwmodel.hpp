#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ebn/csv.hpp"
#include "ebn/error.hpp"
#include "ebn/signals.hpp"
#include "ebn/types.hpp"

namespace ebn::hw {

// Behavioral scales. Currents in A, times in s.
struct HwParams {
  double i_rest = 50e-9;
  double i_reset = 5e-9;
  double i_sl = 1e-9;
  double i_unit = 0.05e-9;      // DAC current per code unit
  double pulse_width = 1e-3;    // spike extender output width
  double tau_dpi = 10e-3;
  double tau_mem = 20e-3;
  double gain = 200.0;          // synapse-to-neuron coupling
  double dt = 10e-6;
  std::optional<double> i_leak_target;  // defaults to i_reset

  double leak_target() const { return i_leak_target.value_or(i_reset); }

  void validate() const {
    auto finite_nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be >= 0", name));
    };
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be > 0", name));
    };
    finite_nonneg(i_rest, "i_rest");
    finite_nonneg(i_reset, "i_reset");
    finite_nonneg(i_sl, "i_sl");
    finite_nonneg(i_unit, "i_unit");
    if (!(i_reset < i_rest)) throw ConfigError("i_reset must be < i_rest");
    positive(pulse_width, "pulse_width");
    positive(tau_dpi, "tau_dpi");
    positive(tau_mem, "tau_mem");
    positive(dt, "dt");
    if (!std::isfinite(gain)) throw ConfigError("gain must be finite");
    if (i_leak_target) finite_nonneg(*i_leak_target, "i_leak_target");
  }
};

inline constexpr int kCodeMin = WeightRegister::kMin;
inline constexpr int kCodeMax = WeightRegister::kMax;

/// Full state of one plastic synapse: 7-bit weight register, 2-bit decision
/// latch, spike-extender state and the two DPI filter currents.
struct SynapseCell {
  int weight_code = 0;
  bool latch_inc = false;   // V_INC
  bool latch_stop = true;   // V_SL
  std::optional<double> pulse_end;
  double i_dpi_exc = 0.0;
  double i_dpi_inh = 0.0;
};

struct NeuronHw {
  double i_mem = 0.0;
};

struct DacOutput {
  double i_exc = 0.0;
  double i_inh = 0.0;
};

// Sign-routed binary-weighted DAC: positive codes drive the excitatory
// branch, negative codes the inhibitory one.
inline DacOutput dac_convert(int weight_code, double i_unit) {
  if (weight_code >= 0) return {weight_code * i_unit, 0.0};
  return {0.0, -weight_code * i_unit};
}

// Currents summed at the two comparator input nodes.
struct CommonNodeSums {
  double increment;  // I_before - I_rest + I_w/2 + I_SL
  double decrement;  // I_rest - I_before - I_w/2 + I_SL
};

inline CommonNodeSums common_node_sums(double i_before, double i_rest, double i_omega_signed,
                                       double i_sl) {
  return {i_before - i_rest + 0.5 * i_omega_signed + i_sl,
          i_rest - i_before - 0.5 * i_omega_signed + i_sl};
}

// Current-mode rule: each comparator reports whether its node sum is
// negative. With i_sl > 0 the two sums add to 2 i_sl, so at most one fires.
inline RuleDecision evaluate_rule_current(double i_before, double i_rest, double i_omega_signed,
                                          double i_sl) {
  const auto sums = common_node_sums(i_before, i_rest, i_omega_signed, i_sl);
  if (sums.increment < 0.0) return RuleDecision::kIncrement;
  if (sums.decrement < 0.0) return RuleDecision::kDecrement;
  return RuleDecision::kHold;
}

// Pulse is high over [rise, pulse_end). Times live on the dt grid; the half-dt
// slack absorbs rounding in rise + width.
inline bool pulse_active(const SynapseCell& cell, double t, double dt) {
  return cell.pulse_end && t + 0.5 * dt < *cell.pulse_end;
}

inline bool falling_edge_due(const SynapseCell& cell, double t, double dt) {
  return cell.pulse_end && !(t + 0.5 * dt < *cell.pulse_end);
}

// Latches the rule decision from the membrane reading taken before any
// synaptic charge from this pulse reaches the neuron, and opens the pulse.
inline SynapseCell on_rising_edge(SynapseCell cell, const NeuronHw& neuron,
                                  const HwParams& params, double t) {
  const auto decision = evaluate_rule_current(
      neuron.i_mem, params.i_rest, cell.weight_code * params.i_unit, params.i_sl);
  cell.latch_stop = decision == RuleDecision::kHold;
  cell.latch_inc = decision == RuleDecision::kIncrement;
  cell.pulse_end = t + params.pulse_width;
  return cell;
}

// Counter logic: commits the latched step into the weight register.
inline SynapseCell on_falling_edge(SynapseCell cell) {
  if (!cell.latch_stop)
    cell.weight_code = WeightRegister::saturate(cell.weight_code + (cell.latch_inc ? 1 : -1));
  cell.pulse_end.reset();
  return cell;
}

inline RuleDecision latched_decision(const SynapseCell& cell) {
  if (cell.latch_stop) return RuleDecision::kHold;
  return cell.latch_inc ? RuleDecision::kIncrement : RuleDecision::kDecrement;
}

// Input spike at the extender. A spike during an active pulse only extends
// it (retriggerable monostable); there is no new rising edge.
inline SynapseCell on_input_spike(SynapseCell cell, const NeuronHw& neuron,
                                  const HwParams& params, double t) {
  if (pulse_active(cell, t, params.dt)) {
    cell.pulse_end = t + params.pulse_width;
    return cell;
  }
  return on_rising_edge(cell, neuron, params, t);
}

// DAC drive seen by the DPI filters over [t, t + dt).
inline DacOutput dpi_drive(const SynapseCell& cell, const HwParams& params, double t) {
  if (!pulse_active(cell, t, params.dt)) return {};
  return dac_convert(cell.weight_code, params.i_unit);
}

// First-order DPI low-pass, exact exponential update over one dt.
inline SynapseCell dpi_step(SynapseCell cell, const HwParams& params, double t) {
  const auto drive = dpi_drive(cell, params, t);
  const double decay = std::exp(-params.dt / params.tau_dpi);
  cell.i_dpi_exc = drive.i_exc + (cell.i_dpi_exc - drive.i_exc) * decay;
  cell.i_dpi_inh = drive.i_inh + (cell.i_dpi_inh - drive.i_inh) * decay;
  return cell;
}

/// Neuron current integrator:
///   tau_mem di/dt = -(i - leak_target) + gain (i_exc - i_inh)
/// exact for inputs held constant over dt, clamped at zero.
inline NeuronHw neuron_step(NeuronHw neuron, double i_exc_total, double i_inh_total,
                            const HwParams& params) {
  const double target = params.leak_target() + params.gain * (i_exc_total - i_inh_total);
  const double decay = std::exp(-params.dt / params.tau_mem);
  neuron.i_mem = std::max(0.0, target + (neuron.i_mem - target) * decay);
  return neuron;
}

/// Exact update of the neuron when its input is the net DPI current
/// u(s) = drive + (start - drive) exp(-s / tau_dpi) over one dt, i.e. the
/// DPI filter and neuron integrator advanced as one linear cascade.
inline NeuronHw neuron_step_cascade(NeuronHw neuron, double net_dpi_start, double net_drive,
                                    const HwParams& params) {
  const double h = params.dt;
  const double em = std::exp(-h / params.tau_mem);
  const double ed = std::exp(-h / params.tau_dpi);
  const double settle = params.leak_target() + params.gain * net_drive;
  const double transient = params.gain * (net_dpi_start - net_drive);
  double coupling;
  if (std::abs(params.tau_dpi - params.tau_mem) > 1e-12 * params.tau_mem)
    coupling = params.tau_dpi / (params.tau_dpi - params.tau_mem) * (ed - em);
  else
    coupling = (h / params.tau_mem) * em;
  neuron.i_mem = std::max(0.0, settle + (neuron.i_mem - settle) * em + transient * coupling);
  return neuron;
}

// ---------------------------------------------------------------------------
// Experiment driver

struct SynapseSetup {
  int initial_code = 0;
  bool plastic = true;
};

struct TraceRow {
  double t;
  double i_mem;
  int weight_code;                      // code of synapse 0 (the plastic one)
  std::optional<RuleDecision> decision; // set on rows where synapse 0 latched
  double i_dpi_exc;                     // summed over synapses
  double i_dpi_inh;
};

struct DecisionEvent {
  double t;
  std::size_t synapse;
  RuleDecision decision;
  double i_before;
};

struct WeightUpdate {
  double t;
  std::size_t synapse;
  int old_code;
  int new_code;
};

struct TraceLog {
  std::vector<TraceRow> rows;
  std::vector<DecisionEvent> decisions;
  std::vector<WeightUpdate> updates;
  double band_lo = 0.0;
  double band_hi = 0.0;
  double duration = 0.0;
  int final_code = 0;
};

/// Event-driven simulation of one neuron fed by a set of synapses, all
/// stimulated by the same spike train. Synapse 0 is the one reported in the
/// trace. Per time step: falling edges, then rising edges (in synapse order,
/// reading i_mem before injection), then the analog datapath advances.
inline TraceLog run_synapses(const HwParams& params, const SpikeTrain& train,
                             std::span<const SynapseSetup> setups) {
  params.validate();
  if (setups.empty()) throw ConfigError("at least one synapse is required");
  for (const auto& s : setups)
    if (s.initial_code < kCodeMin || s.initial_code > kCodeMax)
      throw ConfigError(fmt::format("synapse code {} outside [{}, {}]", s.initial_code, kCodeMin,
                                    kCodeMax));
  if (!(train.duration > 0.0)) throw ConfigError("spike train duration must be > 0");

  const auto n_steps = static_cast<std::size_t>(std::llround(train.duration / params.dt));
  std::vector<std::size_t> spike_steps;
  spike_steps.reserve(train.times.size());
  for (double ts : train.times) spike_steps.push_back(static_cast<std::size_t>(std::llround(ts / params.dt)));

  std::vector<SynapseCell> cells(setups.size());
  for (std::size_t i = 0; i < setups.size(); ++i) cells[i].weight_code = setups[i].initial_code;
  NeuronHw neuron{params.i_reset};

  TraceLog log;
  log.band_lo = params.i_rest - 2.0 * params.i_sl;
  log.band_hi = params.i_rest + 2.0 * params.i_sl;
  log.duration = static_cast<double>(n_steps) * params.dt;
  log.rows.reserve(n_steps);

  std::size_t next_spike = 0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * params.dt;

    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!falling_edge_due(cells[i], t, params.dt)) continue;
      const int before = cells[i].weight_code;
      if (setups[i].plastic)
        cells[i] = on_falling_edge(cells[i]);
      else
        cells[i].pulse_end.reset();
      if (cells[i].weight_code != before)
        log.updates.push_back({t, i, before, cells[i].weight_code});
    }

    std::optional<RuleDecision> row_decision;
    while (next_spike < spike_steps.size() && spike_steps[next_spike] <= k) {
      if (spike_steps[next_spike] == k) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          const bool rising = !pulse_active(cells[i], t, params.dt);
          cells[i] = on_input_spike(cells[i], neuron, params, t);
          if (!setups[i].plastic) {
            cells[i].latch_stop = true;
            continue;
          }
          if (rising) {
            const auto d = latched_decision(cells[i]);
            log.decisions.push_back({t, i, d, neuron.i_mem});
            if (i == 0) row_decision = d;
          }
        }
      }
      ++next_spike;
    }

    double dpi_exc = 0.0, dpi_inh = 0.0;
    for (const auto& c : cells) {
      dpi_exc += c.i_dpi_exc;
      dpi_inh += c.i_dpi_inh;
    }
    log.rows.push_back({t, neuron.i_mem, cells[0].weight_code, row_decision, dpi_exc, dpi_inh});

    double start = 0.0, drive = 0.0;
    for (const auto& c : cells) {
      const auto dac = dpi_drive(c, params, t);
      start += c.i_dpi_exc - c.i_dpi_inh;
      drive += dac.i_exc - dac.i_inh;
    }
    neuron = neuron_step_cascade(neuron, start, drive, params);
    for (auto& c : cells) c = dpi_step(c, params, t);
  }
  log.final_code = cells[0].weight_code;
  return log;
}

// One plastic synapse; the neuron starts at i_reset.
inline TraceLog run_single_synapse(const HwParams& params, const SpikeTrain& train,
                                   int initial_code = 0) {
  const SynapseSetup setup{initial_code, true};
  return run_synapses(params, train, std::span(&setup, 1));
}

// Plastic synapse plus a fixed excitatory synapse on the same spike train.
inline TraceLog run_two_synapse(const HwParams& params, const SpikeTrain& train, int fixed_code,
                                int initial_code = 0) {
  if (fixed_code < 0) throw ConfigError("fixed synapse weight must not be negative");
  const SynapseSetup setups[] = {{initial_code, true}, {fixed_code, false}};
  return run_synapses(params, train, setups);
}

// ---------------------------------------------------------------------------
// Trace analysis

struct HwReport {
  double initial_i_mem = 0.0;
  double peak_i_mem = 0.0;
  bool overshoot = false;          // i_mem rose above i_rest at some point
  int final_code = 0;
  std::size_t n_updates = 0;
  std::size_t direction_changes = 0;
  std::size_t tail_updates = 0;    // non-hold decisions in the final 20%
  bool tail_in_band = false;       // i_mem inside [band_lo, band_hi] over the final 20%
  bool settled = false;
  double settle_time = 0.0;        // time of the last committed weight change
  double increment_time = 0.0;     // time with an increment latched
  double decrement_time = 0.0;
  bool non_converged = false;      // code pinned at a bound, i_mem outside the band
};

inline HwReport analyze(const TraceLog& log, const HwParams& params, double tail_fraction = 0.2) {
  HwReport r;
  r.final_code = log.final_code;
  if (log.rows.empty()) return r;
  r.initial_i_mem = log.rows.front().i_mem;
  r.n_updates = 0;
  for (const auto& u : log.updates)
    if (u.synapse == 0) {
      ++r.n_updates;
      r.settle_time = u.t;
    }

  for (const auto& row : log.rows) r.peak_i_mem = std::max(r.peak_i_mem, row.i_mem);
  r.overshoot = r.initial_i_mem < params.i_rest && r.peak_i_mem > params.i_rest;

  std::optional<RuleDecision> last_dir;
  const DecisionEvent* prev = nullptr;
  auto credit = [&](const DecisionEvent& e, double until) {
    if (e.decision == RuleDecision::kIncrement) r.increment_time += until - e.t;
    if (e.decision == RuleDecision::kDecrement) r.decrement_time += until - e.t;
  };
  const double tail_start = (1.0 - tail_fraction) * log.duration;
  for (const auto& e : log.decisions) {
    if (e.synapse != 0) continue;
    if (prev) credit(*prev, e.t);
    prev = &e;
    if (e.decision == RuleDecision::kHold) continue;
    if (last_dir && *last_dir != e.decision) ++r.direction_changes;
    last_dir = e.decision;
    if (e.t >= tail_start) ++r.tail_updates;
  }
  if (prev) credit(*prev, log.duration);

  bool in_band = true, all_outside = true, pinned = true;
  for (const auto& row : log.rows) {
    if (row.t < tail_start) continue;
    const bool inside = row.i_mem >= log.band_lo && row.i_mem <= log.band_hi;
    in_band = in_band && inside;
    all_outside = all_outside && !inside;
    pinned = pinned && (row.weight_code == kCodeMin || row.weight_code == kCodeMax);
  }
  r.tail_in_band = in_band;
  r.settled = in_band && r.tail_updates == 0;
  r.non_converged = pinned && all_outside;
  return r;
}

// Columns: t,i_mem,weight_code,decision,i_dpi_exc,i_dpi_inh,band_lo,band_hi.
// Every `stride`-th row is written, plus every row carrying a decision.
inline void write_csv(std::ostream& out, const TraceLog& log, std::size_t stride = 1) {
  if (stride == 0) stride = 1;
  out << "t,i_mem,weight_code,decision,i_dpi_exc,i_dpi_inh,band_lo,band_hi\n";
  const auto lo = csv::number(log.band_lo);
  const auto hi = csv::number(log.band_hi);
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const auto& row = log.rows[i];
    if (i % stride != 0 && !row.decision) continue;
    out << csv::number(row.t) << ',' << csv::number(row.i_mem) << ',' << row.weight_code << ','
        << (row.decision ? to_string(*row.decision) : std::string_view{}) << ','
        << csv::number(row.i_dpi_exc) << ',' << csv::number(row.i_dpi_inh) << ',' << lo << ','
        << hi << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const TraceLog& log,
                      std::size_t stride = 1) {
  auto out = csv::open(path);
  write_csv(out, log, stride);
}

}  // namespace ebn::hw
