#pragma once

#include <cstddef>
#include <vector>

#include "wtp/network.hpp"
#include "wtp/quality.hpp"

namespace wtp {

struct QualityParameters {
  double decay_per_day = 0.5;       // K
  double dose = 22.0;               // mg/gal leaving the treatment block
  double minimum = 6.0;             // mg/gal safe floor before distribution
  double detention_minutes = 15.0;  // flocculation delay
  ChlorineMode mode = ChlorineMode::kWellMixed;
  std::size_t tank = 1;             // tank whose chlorine is tracked
};

// Network plus the bits of plumbing the closed loop needs to know about.
struct Plant {
  NetworkModel network;
  QualityParameters quality;
  LinkId treatment_link = 0;
  std::vector<NodeId> monitored_nodes;  // y_P
};

// Example two-tank plant; monitors the distribution node and the tank-1 tee.
Plant make_example_plant(const PlantParameters& params, const QualityParameters& quality);

enum class TankMode { kFilling, kDraining };

struct ControllerMemory {
  ControlVector filtered;                 // last applied (low-passed) control
  double pi_integral = 0.0;               // PSI * minutes
  std::vector<TankMode> tank_modes;       // reactive hysteresis state
  double measured_distribution_pressure = 0.0;
};

struct PlantState {
  std::vector<double> tank_pressures;  // x, PSI
  double chlorine = 0.0;               // y_C in the quality tank, mg/gal
  TransportDelay delay;
  ControllerMemory memory;
};

struct StepOutputs {
  HydraulicSolution hydraulics;
  std::vector<double> tank_inflows;  // GPM, net into each tank
  double power_kw = 0.0;
  double emissions_rate = 0.0;       // y_E, kg CO2 per hour
  double treated_concentration = 0.0;
  bool chlorine_clamped = false;
};

// Advances one step of length dt: hydraulics at (x, u), Euler update of tanks,
// delay line and quality-tank chlorine. `phi` is kg CO2 per kWh.
void advance(const Plant& plant, PlantState& state, const ControlVector& u, double demand,
             double phi, double dt_minutes, StepOutputs& out);

StepOutputs advance(const Plant& plant, PlantState& state, const ControlVector& u, double demand,
                    double phi, double dt_minutes);

}  // namespace wtp
