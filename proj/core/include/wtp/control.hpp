#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "wtp/exogenous.hpp"
#include "wtp/network.hpp"
#include "wtp/plant.hpp"

namespace wtp {

struct CostWeights {
  double chlorine = 4.0;      // lambda_C
  double pressure = 1.0;      // lambda_D
  double emissions = 2.4e-4;  // lambda_E
};

struct MpcConfig {
  CostWeights weights;
  double pressure_setpoint = 86.0;  // PSI
  double chlorine_setpoint = 22.0;  // mg/gal
  int horizon = 2;                  // steps
  std::array<int, kControlCount> resolution{5, 5, 5, 5, 5};
  ControlBounds bounds;
  double tank_min = 77.0;
  double tank_max = 95.0;
  double pipe_min = 77.0;
  double pipe_max = 95.0;
  double lowpass_alpha = 0.5;
  unsigned threads = 1;

  // Throws ConfigError on violated invariants.
  void validate() const;
};

struct OutputVector {
  double chlorine_error = 0.0;  // y_C setpoint - y_C
  double pressure_error = 0.0;  // y_D setpoint - y_D
  double emissions_rate = 0.0;  // y_E, kg CO2 per hour
  std::vector<double> pipe_pressures;
};

double stage_cost(const OutputVector& out, const MpcConfig& cfg);

// Demand and emissions lookups indexed by simulation step.
struct ExogenousInputs {
  const DemandProfile& demand;
  const EmissionsIntensitySeries& intensity;
  double dt_minutes;

  double time(std::size_t step) const { return static_cast<double>(step) * dt_minutes; }
  double demand_at_step(std::size_t step) const { return wtp::demand_at(demand, time(step)); }
  double phi_at_step(std::size_t step) const { return intensity.at(time(step)); }
};

struct RolloutResult {
  std::vector<OutputVector> outputs;               // per stage
  std::vector<std::vector<double>> tank_pressures;  // x after each stage
  std::vector<double> chlorine;                    // y_C after each stage
  double cost = 0.0;
  bool feasible = true;
  double worst_violation = 0.0;  // PSI beyond the tightest violated bound
};

// Holds `u` over `horizon` steps from step k, accumulating the stage cost and
// checking the tank and monitored-pressure bounds.
RolloutResult predict(const Plant& plant, const PlantState& state, const ControlVector& u,
                      const ExogenousInputs& exo, std::size_t k, int horizon, const MpcConfig& cfg);

// Cartesian grid over the control dimensions, dimension 0 most significant.
class ControlMesh {
 public:
  ControlMesh(const ControlBounds& bounds, const std::array<int, kControlCount>& resolution);

  std::size_t size() const { return size_; }
  const std::vector<double>& axis(std::size_t dim) const { return axes_[dim]; }
  std::array<std::size_t, kControlCount> unflatten(std::size_t flat) const;
  ControlVector point(std::size_t flat) const;

 private:
  std::array<std::vector<double>, kControlCount> axes_;
  std::size_t size_ = 1;
};

struct MeshEvaluation {
  double cost = 0.0;
  bool feasible = true;
  double worst_violation = 0.0;
};

struct MeshChoice {
  ControlVector point;
  std::array<std::size_t, kControlCount> index{};
  std::size_t flat_index = 0;
  MeshEvaluation evaluation;
  bool fallback = false;  // no feasible point; minimal worst violation returned
};

// Exhaustive search. Lowest cost among feasible points; otherwise lowest worst
// violation. Ties go to the lexicographically first index whatever the thread
// count.
MeshChoice mesh_search(const ControlMesh& mesh,
                       const std::function<MeshEvaluation(const ControlVector&)>& evaluate,
                       unsigned threads = 1);

// u_f = alpha u* + (1 - alpha) u_prev, clamped to the bounds.
ControlVector lowpass(const ControlVector& previous, const ControlVector& target, double alpha,
                      const ControlBounds& bounds);

struct MpcDecision {
  MeshChoice choice;      // raw mesh point u*
  ControlVector applied;  // lowpass(previous, u*)
};

// Rollouts are evaluated on the filtered control each mesh point would
// produce, so the predicted trajectory is the one the plant will follow.
MpcDecision mpc_step(const Plant& plant, const PlantState& state, const ExogenousInputs& exo,
                     std::size_t k, const MpcConfig& cfg);

struct ReactiveConfig {
  std::vector<double> low_threshold{80.0, 88.0};   // PSI, switch to filling
  std::vector<double> high_threshold{93.0, 94.0};  // PSI, switch to draining
  std::vector<double> fill_flow{1000.0, 1000.0};   // GPM while filling
  std::vector<double> valve_open{200.0, 400.0};    // GPM/PSI while draining
  double kp = 0.5;                                 // PSI per PSI
  double ki = 0.05;                                // PSI per PSI-minute
  double bias = 8.0;                               // PSI feed-forward
  double pressure_setpoint = 86.0;
  double booster_min = 0.0;
  double booster_max = 20.0;

  void validate() const;
};

// Tank hysteresis plus PI booster. Updates the hysteresis modes and the PI
// integrator held in `state.memory`.
ControlVector reactive_step(PlantState& state, double measured_distribution_pressure,
                            const ReactiveConfig& cfg, double dt_minutes);

}  // namespace wtp
