#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wtp/control.hpp"
#include "wtp/exogenous.hpp"
#include "wtp/network.hpp"
#include "wtp/plant.hpp"

namespace wtp {

enum class ControllerKind { kMpc, kReactive };

std::string_view controller_name(ControllerKind kind);
std::optional<ControllerKind> parse_controller(std::string_view name);

struct Scenario {
  PlantParameters plant;
  QualityParameters quality;
  DemandProfile demand;
  EmissionsIntensitySeries intensity;
  ControllerKind controller = ControllerKind::kMpc;
  MpcConfig mpc;
  ReactiveConfig reactive;
  double dt_minutes = 2.5;
  double duration_hours = 120.0;
  std::vector<double> initial_tank_pressures{86.0, 86.0};
  double initial_chlorine = 22.0;
  ControlVector initial_control{{8.0, 0.0, 0.0, 0.0, 0.0}};
  double warmup_hours = 0.0;  // leading interval left out of the metrics

  std::size_t steps() const;
  void validate() const;
};

// Case-study scale defaults: 5 MGD, 77-95 PSI bounds, 22/6 mg/gal chlorine,
// 120 h at 2.5 min, synthetic grid mix (seed 2024).
Scenario default_scenario();

struct TraceMeta {
  ControllerKind controller = ControllerKind::kMpc;
  double dt_minutes = 2.5;
  double pressure_setpoint = 86.0;
  double tank_min = 77.0;
  double tank_max = 95.0;
  double pipe_min = 77.0;
  double pipe_max = 95.0;
  double warmup_hours = 0.0;
};

struct TraceRecord {
  std::size_t step = 0;
  double time_minutes = 0.0;
  double demand = 0.0;  // GPM
  double phi = 0.0;     // kg CO2 per kWh
  std::array<double, 2> tank_pressure{};
  std::array<double, 2> tank_pressure_next{};
  std::array<double, 2> tank_inflow{};  // GPM, net
  ControlVector raw;                    // controller output before filtering
  ControlVector applied;
  double distribution_pressure = 0.0;  // y_D
  double tee_pressure = 0.0;           // tank-1 tee
  double chlorine = 0.0;               // y_C after the step
  double power_kw = 0.0;
  double emissions_rate = 0.0;  // kg CO2 per hour
  double treatment_flow = 0.0;
  double source_flow = 0.0;
  bool feasible = true;            // MPC found a feasible mesh point
  bool fallback = false;           // MPC used the minimal-violation fallback
  double predicted_violation = 0.0;
  bool bound_violation = false;  // plant left the tank / pipe pressure band
  bool chlorine_clamped = false;
};

struct SimulationTrace {
  TraceMeta meta;
  std::vector<TraceRecord> records;
};

// Closed loop over the scenario. Deterministic for a given scenario.
SimulationTrace run(const Scenario& scenario);

struct Metrics {
  std::string controller;
  std::size_t steps = 0;
  double duration_minutes = 0.0;
  double total_emissions_kg = 0.0;
  double peak_emissions_rate = 0.0;  // kg/h
  double total_energy_kwh = 0.0;
  double pressure_rms_error = 0.0;  // PSI
  double pressure_min = 0.0;
  double pressure_max = 0.0;
  std::array<double, 2> tank_min{};
  std::array<double, 2> tank_max{};
  double chlorine_min = 0.0;
  std::size_t violation_steps = 0;
  std::size_t fallback_steps = 0;
  double peak_treatment_flow = 0.0;
  double peak_source_flow = 0.0;
};

Metrics metrics(const SimulationTrace& trace);

struct MetricDelta {
  std::string name;
  double baseline = 0.0;
  double candidate = 0.0;
  double reduction = 0.0;                        // baseline - candidate
  std::optional<double> reduction_percent;       // relative to baseline
};

struct Comparison {
  std::string baseline;
  std::string candidate;
  std::vector<MetricDelta> rows;
  double emissions_savings_percent = 0.0;
};

// Positive reductions mean the candidate is lower than the baseline.
Comparison compare(const Metrics& baseline, const Metrics& candidate);

std::string metrics_json(const Metrics& m);
std::string comparison_json(const Comparison& c);
std::string comparison_text(const Comparison& c);

// Column order is fixed; see README.
std::vector<std::string_view> trace_columns();
void write_trace_csv(const std::filesystem::path& path, const SimulationTrace& trace);
std::string trace_csv(const SimulationTrace& trace);
SimulationTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace wtp
