#include "wtp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "wtp/errors.hpp"
#include "wtp/text.hpp"
#include "wtp/units.hpp"

namespace wtp {

std::string_view controller_name(ControllerKind kind) {
  return kind == ControllerKind::kMpc ? "mpc" : "reactive";
}

std::optional<ControllerKind> parse_controller(std::string_view name) {
  if (name == "mpc") return ControllerKind::kMpc;
  if (name == "reactive") return ControllerKind::kReactive;
  return std::nullopt;
}

std::size_t Scenario::steps() const {
  return static_cast<std::size_t>(std::llround(duration_hours * units::kMinutesPerHour / dt_minutes));
}

void Scenario::validate() const {
  if (!(dt_minutes > 0.0)) throw ConfigError("simulation.dt_min must be positive");
  if (!(duration_hours > 0.0)) throw ConfigError("simulation.duration_h must be positive");
  const double ratio = duration_hours * units::kMinutesPerHour / dt_minutes;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ConfigError("simulation: duration must be a whole number of time steps");
  }
  if (initial_tank_pressures.size() != 2) throw ConfigError("simulation: need two initial tank pressures");
  for (double x : initial_tank_pressures) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("simulation: initial tank pressures must be positive");
  }
  if (!(initial_chlorine >= 0.0)) throw ConfigError("simulation.initial_chlorine_mg_per_gal must be >= 0");
  if (!(warmup_hours >= 0.0 && warmup_hours < duration_hours)) {
    throw ConfigError("simulation.warmup_h must be in [0, duration)");
  }
  if (intensity.hours() == 0) throw ConfigError("emissions: intensity series is empty");
  if (quality.decay_per_day < 0.0) throw ConfigError("quality.decay_per_day must be >= 0");
  if (!(units::per_day_to_per_minute(quality.decay_per_day) * dt_minutes < 1.0)) {
    throw ConfigError("quality: K * dt must be < 1");
  }
  if (!(quality.dose >= 0.0)) throw ConfigError("quality.dose_mg_per_gal must be >= 0");
  mpc.validate();
  reactive.validate();
  for (std::size_t j = 0; j < 2; ++j) {
    if (mpc.bounds.upper.values[3 + j] > plant.valve_max_conductance[j]) {
      throw ConfigError("controller.mpc: valve bound exceeds plant valve maximum for tank" + std::to_string(j + 1));
    }
    if (j < reactive.valve_open.size() && reactive.valve_open[j] > plant.valve_max_conductance[j]) {
      throw ConfigError("controller.reactive: valve opening exceeds plant maximum for tank" + std::to_string(j + 1));
    }
  }
  // Throws on bad element values.
  (void)build_example_plant(plant);
  (void)TransportDelay(quality.detention_minutes, dt_minutes, {});
}

Scenario default_scenario() {
  Scenario s;
  s.plant.distribution_resistance = hazen_williams_resistance(12.0, 100.0, 130.0, 3500.0);
  for (std::size_t j = 0; j < 2; ++j) {
    s.plant.tank_capacitance[j] = capacitance_from_time_constant(240.0, s.plant.valve_max_conductance[j]);
  }
  s.mpc.bounds.lower = ControlVector{};
  s.mpc.bounds.upper = ControlVector{{20.0, 2000.0, 2000.0, s.plant.valve_max_conductance[0],
                                      s.plant.valve_max_conductance[1]}};
  const auto hours = static_cast<std::size_t>(std::ceil(s.duration_hours));
  const auto mix = synthetic_energy_mix(std::max<std::size_t>(hours, 24), 2024);
  s.intensity = intensity_series(fit_emissions_coefficients(mix).coefficients, mix, hours);
  return s;
}

namespace {

double excess(double v, double lo, double hi) { return std::max({0.0, lo - v, v - hi}); }

std::string state_dump(const PlantState& s) {
  std::ostringstream out;
  out << "x=[";
  for (std::size_t j = 0; j < s.tank_pressures.size(); ++j) {
    out << (j ? ", " : "") << text::format_double(s.tank_pressures[j]);
  }
  out << "] y_C=" << text::format_double(s.chlorine);
  return out.str();
}

}  // namespace

SimulationTrace run(const Scenario& scenario) {
  scenario.validate();
  const Plant plant = make_example_plant(scenario.plant, scenario.quality);
  const ExogenousInputs exo{scenario.demand, scenario.intensity, scenario.dt_minutes};
  const MpcConfig& mpc = scenario.mpc;
  const NodeId tee1 = plant.network.tanks()[0].tee;
  const LinkId source_link = plant.network.link_id("source_pump");

  PlantState state;
  state.tank_pressures = scenario.initial_tank_pressures;
  state.chlorine = scenario.initial_chlorine;
  state.delay = TransportDelay(scenario.quality.detention_minutes, scenario.dt_minutes,
                               FlowSlot{0.0, scenario.quality.dose});
  state.memory.filtered = scenario.initial_control;
  state.memory.measured_distribution_pressure = scenario.reactive.pressure_setpoint;

  SimulationTrace trace;
  trace.meta = TraceMeta{scenario.controller, scenario.dt_minutes,
                         scenario.controller == ControllerKind::kMpc ? mpc.pressure_setpoint
                                                                     : scenario.reactive.pressure_setpoint,
                         mpc.tank_min, mpc.tank_max, mpc.pipe_min, mpc.pipe_max, scenario.warmup_hours};
  const std::size_t steps = scenario.steps();
  trace.records.reserve(steps);

  StepOutputs out;
  for (std::size_t k = 0; k < steps; ++k) {
    TraceRecord rec;
    rec.step = k;
    rec.time_minutes = exo.time(k);
    try {
      rec.demand = exo.demand_at_step(k);
      rec.phi = exo.phi_at_step(k);
      if (scenario.controller == ControllerKind::kMpc) {
        const MpcDecision decision = mpc_step(plant, state, exo, k, mpc);
        rec.raw = decision.choice.point;
        rec.applied = decision.applied;
        rec.feasible = !decision.choice.fallback;
        rec.fallback = decision.choice.fallback;
        rec.predicted_violation = decision.choice.evaluation.worst_violation;
      } else {
        rec.raw = reactive_step(state, state.memory.measured_distribution_pressure, scenario.reactive,
                                scenario.dt_minutes);
        rec.applied = rec.raw;
      }
      for (std::size_t j = 0; j < 2; ++j) rec.tank_pressure[j] = state.tank_pressures[j];
      advance(plant, state, rec.applied, rec.demand, rec.phi, scenario.dt_minutes, out);
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(k) + ": " + e.what() + " (" + state_dump(state) + ")");
    }
    state.memory.filtered = rec.applied;
    state.memory.measured_distribution_pressure = out.hydraulics.distribution_pressure;

    const auto& p = out.hydraulics.node_pressures;
    rec.distribution_pressure = out.hydraulics.distribution_pressure;
    rec.tee_pressure = p[tee1];
    for (std::size_t j = 0; j < 2; ++j) {
      rec.tank_pressure_next[j] = state.tank_pressures[j];
      rec.tank_inflow[j] = out.tank_inflows[j];
    }
    rec.chlorine = state.chlorine;
    rec.power_kw = out.power_kw;
    rec.emissions_rate = out.emissions_rate;
    rec.treatment_flow = out.hydraulics.link_flows[plant.treatment_link];
    rec.source_flow = out.hydraulics.link_flows[source_link];
    rec.chlorine_clamped = out.chlorine_clamped;

    double worst = 0.0;
    for (NodeId node : plant.monitored_nodes) worst = std::max(worst, excess(p[node], mpc.pipe_min, mpc.pipe_max));
    for (double x : state.tank_pressures) worst = std::max(worst, excess(x, mpc.tank_min, mpc.tank_max));
    rec.bound_violation = worst > 0.0;
    trace.records.push_back(rec);
  }
  return trace;
}

Metrics metrics(const SimulationTrace& trace) {
  const double dt = trace.meta.dt_minutes;
  const double warmup = trace.meta.warmup_hours * units::kMinutesPerHour;
  Metrics m;
  m.controller = std::string(controller_name(trace.meta.controller));
  m.pressure_min = m.chlorine_min = std::numeric_limits<double>::infinity();
  m.pressure_max = -std::numeric_limits<double>::infinity();
  m.tank_min.fill(std::numeric_limits<double>::infinity());
  m.tank_max.fill(-std::numeric_limits<double>::infinity());
  double sq = 0.0;
  for (const auto& r : trace.records) {
    if (r.time_minutes < warmup) continue;
    ++m.steps;
    m.total_emissions_kg += r.emissions_rate * dt / units::kMinutesPerHour;
    m.total_energy_kwh += r.power_kw * dt / units::kMinutesPerHour;
    m.peak_emissions_rate = std::max(m.peak_emissions_rate, r.emissions_rate);
    const double e = trace.meta.pressure_setpoint - r.distribution_pressure;
    sq += e * e;
    m.pressure_min = std::min(m.pressure_min, r.distribution_pressure);
    m.pressure_max = std::max(m.pressure_max, r.distribution_pressure);
    for (std::size_t j = 0; j < 2; ++j) {
      m.tank_min[j] = std::min({m.tank_min[j], r.tank_pressure[j], r.tank_pressure_next[j]});
      m.tank_max[j] = std::max({m.tank_max[j], r.tank_pressure[j], r.tank_pressure_next[j]});
    }
    m.chlorine_min = std::min(m.chlorine_min, r.chlorine);
    m.violation_steps += r.bound_violation ? 1 : 0;
    m.fallback_steps += r.fallback ? 1 : 0;
    m.peak_treatment_flow = std::max(m.peak_treatment_flow, r.treatment_flow);
    m.peak_source_flow = std::max(m.peak_source_flow, r.source_flow);
  }
  if (m.steps == 0) throw SeriesError("trace has no records to summarize");
  m.duration_minutes = static_cast<double>(m.steps) * dt;
  m.pressure_rms_error = std::sqrt(sq / static_cast<double>(m.steps));
  return m;
}

Comparison compare(const Metrics& baseline, const Metrics& candidate) {
  if (baseline.steps != candidate.steps || baseline.duration_minutes != candidate.duration_minutes) {
    throw ComparisonError("metrics cover different durations (" + text::format_double(baseline.duration_minutes) +
                          " vs " + text::format_double(candidate.duration_minutes) + " min)");
  }
  Comparison c;
  c.baseline = baseline.controller;
  c.candidate = candidate.controller;
  auto add = [&](std::string name, double a, double b) {
    MetricDelta d{std::move(name), a, b, a - b, std::nullopt};
    if (a != 0.0) d.reduction_percent = 100.0 * (a - b) / a;
    else if (b == 0.0) d.reduction_percent = 0.0;
    c.rows.push_back(std::move(d));
  };
  add("total_emissions_kg", baseline.total_emissions_kg, candidate.total_emissions_kg);
  add("peak_emissions_kg_per_h", baseline.peak_emissions_rate, candidate.peak_emissions_rate);
  add("total_energy_kwh", baseline.total_energy_kwh, candidate.total_energy_kwh);
  add("pressure_rms_error_psi", baseline.pressure_rms_error, candidate.pressure_rms_error);
  add("pressure_min_psi", baseline.pressure_min, candidate.pressure_min);
  add("pressure_max_psi", baseline.pressure_max, candidate.pressure_max);
  for (std::size_t j = 0; j < 2; ++j) {
    const std::string t = "tank" + std::to_string(j + 1);
    add(t + "_min_psi", baseline.tank_min[j], candidate.tank_min[j]);
    add(t + "_max_psi", baseline.tank_max[j], candidate.tank_max[j]);
  }
  add("chlorine_min_mg_per_gal", baseline.chlorine_min, candidate.chlorine_min);
  add("violation_steps", static_cast<double>(baseline.violation_steps), static_cast<double>(candidate.violation_steps));
  add("peak_treatment_flow_gpm", baseline.peak_treatment_flow, candidate.peak_treatment_flow);
  add("peak_source_flow_gpm", baseline.peak_source_flow, candidate.peak_source_flow);
  c.emissions_savings_percent = c.rows.front().reduction_percent.value_or(0.0);
  return c;
}

std::string metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["controller"] = m.controller;
  j["steps"] = m.steps;
  j["duration_minutes"] = m.duration_minutes;
  j["total_emissions_kg"] = m.total_emissions_kg;
  j["peak_emissions_kg_per_h"] = m.peak_emissions_rate;
  j["total_energy_kwh"] = m.total_energy_kwh;
  j["pressure_rms_error_psi"] = m.pressure_rms_error;
  j["pressure_min_psi"] = m.pressure_min;
  j["pressure_max_psi"] = m.pressure_max;
  j["tank_min_psi"] = m.tank_min;
  j["tank_max_psi"] = m.tank_max;
  j["chlorine_min_mg_per_gal"] = m.chlorine_min;
  j["violation_steps"] = m.violation_steps;
  j["fallback_steps"] = m.fallback_steps;
  j["peak_treatment_flow_gpm"] = m.peak_treatment_flow;
  j["peak_source_flow_gpm"] = m.peak_source_flow;
  return j.dump(2) + "\n";
}

std::string comparison_json(const Comparison& c) {
  nlohmann::ordered_json j;
  j["baseline"] = c.baseline;
  j["candidate"] = c.candidate;
  j["emissions_savings_percent"] = c.emissions_savings_percent;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& d : c.rows) {
    nlohmann::ordered_json r;
    r["metric"] = d.name;
    r["baseline"] = d.baseline;
    r["candidate"] = d.candidate;
    r["reduction"] = d.reduction;
    r["reduction_percent"] = d.reduction_percent ? nlohmann::ordered_json(*d.reduction_percent) : nullptr;
    rows.push_back(std::move(r));
  }
  j["metrics"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string comparison_text(const Comparison& c) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "metric" << std::right << std::setw(14) << c.baseline << std::setw(14)
      << c.candidate << std::setw(14) << "reduction" << std::setw(10) << "%" << '\n';
  out << std::fixed;
  for (const auto& d : c.rows) {
    out << std::left << std::setw(28) << d.name << std::right << std::setprecision(3) << std::setw(14) << d.baseline
        << std::setw(14) << d.candidate << std::setw(14) << d.reduction << std::setw(10);
    if (d.reduction_percent) out << std::setprecision(2) << *d.reduction_percent;
    else out << "n/a";
    out << '\n';
  }
  out << "emissions savings: " << std::setprecision(2) << c.emissions_savings_percent << "%\n";
  return out.str();
}

namespace {

constexpr std::array<std::string_view, 36> kTraceColumns{
    "step",         "time_min",      "demand_gpm",     "phi_kg_per_kwh",    "x1_psi",
    "x2_psi",       "x1_next_psi",   "x2_next_psi",    "tank1_inflow_gpm",  "tank2_inflow_gpm",
    "pb_raw_psi",   "fp1_raw_gpm",   "fp2_raw_gpm",    "r1_raw_gpm_per_psi", "r2_raw_gpm_per_psi",
    "pb_psi",       "fp1_gpm",       "fp2_gpm",        "r1_gpm_per_psi",    "r2_gpm_per_psi",
    "yd_psi",       "tee1_psi",      "chlorine_mg_per_gal", "power_kw",     "emissions_kg_per_h",
    "treatment_gpm", "source_gpm",   "feasible",       "fallback",          "predicted_violation_psi",
    "bound_violation", "chlorine_clamped", "controller_code", "dt_min",     "setpoint_psi",
    "warmup_h"};

}  // namespace

std::vector<std::string_view> trace_columns() { return {kTraceColumns.begin(), kTraceColumns.end()}; }

std::string trace_csv(const SimulationTrace& trace) {
  std::string out;
  out.reserve(trace.records.size() * 400);
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    if (i) out += ',';
    out += kTraceColumns[i];
  }
  out += '\n';
  const auto f = [&](double v) {
    out += text::format_double(v);
    out += ',';
  };
  const auto b = [&](bool v) {
    out += v ? "1," : "0,";
  };
  for (const auto& r : trace.records) {
    out += std::to_string(r.step);
    out += ',';
    f(r.time_minutes);
    f(r.demand);
    f(r.phi);
    for (double v : r.tank_pressure) f(v);
    for (double v : r.tank_pressure_next) f(v);
    for (double v : r.tank_inflow) f(v);
    for (double v : r.raw.values) f(v);
    for (double v : r.applied.values) f(v);
    f(r.distribution_pressure);
    f(r.tee_pressure);
    f(r.chlorine);
    f(r.power_kw);
    f(r.emissions_rate);
    f(r.treatment_flow);
    f(r.source_flow);
    b(r.feasible);
    b(r.fallback);
    f(r.predicted_violation);
    b(r.bound_violation);
    b(r.chlorine_clamped);
    out += trace.meta.controller == ControllerKind::kMpc ? "0," : "1,";
    f(trace.meta.dt_minutes);
    f(trace.meta.pressure_setpoint);
    out += text::format_double(trace.meta.warmup_hours);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const SimulationTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << trace_csv(trace);
}

SimulationTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty trace", 1);
  const auto header = text::split(line);
  if (header.size() != kTraceColumns.size() || !std::equal(header.begin(), header.end(), kTraceColumns.begin())) {
    throw ParseError(path.string() + ":1: unexpected trace header", 1);
  }
  SimulationTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line);
    if (fields.size() != kTraceColumns.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": wrong field count", line_no);
    }
    std::array<double, kTraceColumns.size()> v{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto parsed = text::parse_double(fields[i]);
      if (!parsed) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number", line_no);
      v[i] = *parsed;
    }
    TraceRecord r;
    std::size_t c = 0;
    r.step = static_cast<std::size_t>(v[c++]);
    r.time_minutes = v[c++];
    r.demand = v[c++];
    r.phi = v[c++];
    for (auto& x : r.tank_pressure) x = v[c++];
    for (auto& x : r.tank_pressure_next) x = v[c++];
    for (auto& x : r.tank_inflow) x = v[c++];
    for (auto& x : r.raw.values) x = v[c++];
    for (auto& x : r.applied.values) x = v[c++];
    r.distribution_pressure = v[c++];
    r.tee_pressure = v[c++];
    r.chlorine = v[c++];
    r.power_kw = v[c++];
    r.emissions_rate = v[c++];
    r.treatment_flow = v[c++];
    r.source_flow = v[c++];
    r.feasible = v[c++] != 0.0;
    r.fallback = v[c++] != 0.0;
    r.predicted_violation = v[c++];
    r.bound_violation = v[c++] != 0.0;
    r.chlorine_clamped = v[c++] != 0.0;
    trace.meta.controller = v[c++] == 0.0 ? ControllerKind::kMpc : ControllerKind::kReactive;
    trace.meta.dt_minutes = v[c++];
    trace.meta.pressure_setpoint = v[c++];
    trace.meta.warmup_hours = v[c++];
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace wtp
