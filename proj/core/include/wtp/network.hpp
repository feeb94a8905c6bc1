#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wtp {

// Actuator slots of the control vector u(k).
enum class ControlIndex : std::size_t {
  kBoosterPressure = 0,
  kInletFlow1,
  kInletFlow2,
  kOutletConductance1,
  kOutletConductance2,
};

inline constexpr std::size_t kControlCount = 5;

std::string_view control_name(ControlIndex index);

struct ControlVector {
  std::array<double, kControlCount> values{};

  double& operator[](ControlIndex i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](ControlIndex i) const { return values[static_cast<std::size_t>(i)]; }

  double booster_pressure() const { return (*this)[ControlIndex::kBoosterPressure]; }
  double inlet_flow(std::size_t tank) const { return values[1 + tank]; }
  double outlet_conductance(std::size_t tank) const { return values[3 + tank]; }

  friend bool operator==(const ControlVector&, const ControlVector&) = default;
};

struct ControlBounds {
  ControlVector lower;
  ControlVector upper;

  bool contains(const ControlVector& u) const;
  ControlVector clamp(const ControlVector& u) const;
};

using NodeId = std::size_t;
using LinkId = std::size_t;

enum class NodeKind { kJunction, kFixed, kTank };

struct Node {
  std::string name;
  NodeKind kind = NodeKind::kJunction;
  double fixed_pressure = 0.0;  // kFixed only
  std::size_t tank = 0;         // kTank only
};

// Linear pipe law: P_from - P_to = R * F.
struct Pipe {
  double resistance;  // PSI per GPM
};

// Actuated valve: F = r * (P_from - P_to), r = u[control] in [0, max_conductance].
struct Valve {
  ControlIndex control;
  double max_conductance;  // GPM per PSI
};

// Ideal pressure source. Imposes P_to - P_ref = head where the reference node
// defaults to the pump suction (from). A distinct reference models a pump whose
// discharge is regulated relative to some upstream node.
struct PressurePump {
  std::variant<double, ControlIndex> head;
  std::optional<NodeId> reference;
};

// Ideal flow source: prescribes F = u[control] >= 0 from -> to.
struct FlowPump {
  ControlIndex control;
};

using LinkElement = std::variant<Pipe, Valve, PressurePump, FlowPump>;

struct Link {
  std::string name;
  NodeId from;
  NodeId to;
  LinkElement element;
};

struct Tank {
  std::string name;
  double capacitance;  // PSI per gallon
  NodeId node;         // the kTank node holding x_j
  NodeId tee;          // junction the tank branch attaches to
};

struct NetworkDescription {
  std::vector<Node> nodes;
  std::vector<Link> links;
  std::vector<Tank> tanks;
  NodeId demand_node = 0;
  NodeId output_node = 0;
};

// Immutable plant topology. Validated on construction; safe to share between
// threads.
class NetworkModel {
 public:
  explicit NetworkModel(NetworkDescription description);

  const std::vector<Node>& nodes() const { return desc_.nodes; }
  const std::vector<Link>& links() const { return desc_.links; }
  const std::vector<Tank>& tanks() const { return desc_.tanks; }
  NodeId demand_node() const { return desc_.demand_node; }
  NodeId output_node() const { return desc_.output_node; }

  NodeId node_id(std::string_view name) const;
  LinkId link_id(std::string_view name) const;

  // Layout of the nodal system: junction pressures first, then one flow
  // unknown per pressure pump.
  std::size_t unknown_count() const { return unknown_count_; }
  std::optional<std::size_t> pressure_unknown(NodeId node) const;
  std::optional<std::size_t> flow_unknown(LinkId link) const;

  bool is_pump(LinkId link) const;

 private:
  void validate() const;

  NetworkDescription desc_;
  std::vector<std::ptrdiff_t> node_unknown_;
  std::vector<std::ptrdiff_t> link_unknown_;
  std::size_t unknown_count_ = 0;
};

struct HydraulicSolution {
  std::vector<double> node_pressures;  // PSI, indexed by NodeId
  std::vector<double> link_flows;      // GPM, signed from -> to
  std::vector<double> pump_powers;     // PSI*GPM, F * (P_to - P_from); 0 for non-pumps
  double demand = 0.0;                 // GPM extracted at the demand node
  double distribution_pressure = 0.0;  // y_D
  double total_power = 0.0;            // PSI*GPM, sum of max(0, pump power)
};

// Assembles and solves the linear nodal system. Throws SolverError naming the
// offending node when the system is singular, std::invalid_argument on bad
// inputs.
HydraulicSolution solve_flows(const NetworkModel& model, std::span<const double> tank_pressures,
                              const ControlVector& u, double demand);

// Same, reusing the buffers of `out`.
void solve_flows(const NetworkModel& model, std::span<const double> tank_pressures,
                 const ControlVector& u, double demand, HydraulicSolution& out);

// Signed flow balance (in - out, including demand) at every node.
std::vector<double> nodal_imbalance(const NetworkModel& model, const HydraulicSolution& sol);

// Net inflow into each tank, GPM.
std::vector<double> tank_net_inflows(const NetworkModel& model, const HydraulicSolution& sol);

// x_j(k+1) = x_j(k) + C_j * dt * sum_i F_ij(k).
std::vector<double> step_tanks(const NetworkModel& model, std::span<const double> tank_pressures,
                               const HydraulicSolution& sol, double dt_minutes);

struct PumpPower {
  double psi_gpm = 0.0;
  double kw = 0.0;
};

PumpPower pump_power(const HydraulicSolution& sol);

// Element values for the two-tank example plant.
struct PlantParameters {
  double source_pressure = 78.0;            // P_s, PSI
  double treatment_resistance = 0.003;      // R_T, PSI per GPM
  double distribution_resistance = 5.9e-4;  // R, PSI per GPM
  std::array<double, 2> tank_capacitance{1.0 / (240.0 * 200.0), 1.0 / (240.0 * 400.0)};
  std::array<double, 2> valve_max_conductance{200.0, 400.0};
};

namespace plant_names {
inline constexpr std::string_view kReservoir = "reservoir";
inline constexpr std::string_view kSource = "source";
inline constexpr std::string_view kTreated = "treated";
inline constexpr std::string_view kBooster = "booster";
inline constexpr std::string_view kDistribution = "distribution";
inline constexpr std::string_view kTank1 = "tank1";
inline constexpr std::string_view kTank2 = "tank2";
inline constexpr std::string_view kTreatment = "treatment";
}  // namespace plant_names

// reservoir -> source pump (P_s) -> [tank 1 tee] -> treatment R_T -> booster
// (discharge held at P_s + P_b relative to the tank-1 tee) -> distribution
// pipe R -> [tank 2 tee, demand]. Each tank hangs off its tee through an inlet
// flow pump and an outlet valve.
NetworkModel build_example_plant(const PlantParameters& params);

// Closed-form distribution pressure of the example plant.
double closed_form_distribution_pressure(double tank2_pressure, const ControlVector& u,
                                         double demand, double source_pressure,
                                         double distribution_resistance);

// Hazen-Williams pressure drop (PSI) for water in a circular pipe.
double hazen_williams_drop(double diameter_in, double length_ft, double roughness,
                           double flow_gpm);

// Slope d(dP)/dF of the Hazen-Williams law at `flow_gpm`, PSI per GPM.
double hazen_williams_resistance(double diameter_in, double length_ft, double roughness,
                                 double flow_gpm);

// C such that a tank draining through conductance r has time constant tau.
double capacitance_from_time_constant(double tau_minutes, double conductance);

}  // namespace wtp
