#include "wtp/network.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wtp/errors.hpp"
#include "wtp/units.hpp"

namespace wtp {

namespace {

constexpr std::size_t kStackUnknowns = 16;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double head_value(const PressurePump& pump, const ControlVector& u) {
  if (const auto* fixed = std::get_if<double>(&pump.head)) return *fixed;
  return u[std::get<ControlIndex>(pump.head)];
}

}  // namespace

std::string_view control_name(ControlIndex index) {
  switch (index) {
    case ControlIndex::kBoosterPressure: return "booster_pressure";
    case ControlIndex::kInletFlow1: return "inlet_flow1";
    case ControlIndex::kInletFlow2: return "inlet_flow2";
    case ControlIndex::kOutletConductance1: return "outlet_conductance1";
    case ControlIndex::kOutletConductance2: return "outlet_conductance2";
  }
  return "unknown";
}

bool ControlBounds::contains(const ControlVector& u) const {
  for (std::size_t i = 0; i < kControlCount; ++i) {
    if (!(u.values[i] >= lower.values[i] && u.values[i] <= upper.values[i])) return false;
  }
  return true;
}

ControlVector ControlBounds::clamp(const ControlVector& u) const {
  ControlVector out;
  for (std::size_t i = 0; i < kControlCount; ++i) {
    out.values[i] = std::clamp(u.values[i], lower.values[i], upper.values[i]);
  }
  return out;
}

NetworkModel::NetworkModel(NetworkDescription description) : desc_(std::move(description)) {
  validate();

  node_unknown_.assign(desc_.nodes.size(), -1);
  link_unknown_.assign(desc_.links.size(), -1);
  std::size_t next = 0;
  for (std::size_t i = 0; i < desc_.nodes.size(); ++i) {
    if (desc_.nodes[i].kind == NodeKind::kJunction) node_unknown_[i] = static_cast<std::ptrdiff_t>(next++);
  }
  for (std::size_t i = 0; i < desc_.links.size(); ++i) {
    if (std::holds_alternative<PressurePump>(desc_.links[i].element)) {
      link_unknown_[i] = static_cast<std::ptrdiff_t>(next++);
    }
  }
  unknown_count_ = next;
}

void NetworkModel::validate() const {
  const auto& nodes = desc_.nodes;
  const std::size_t n = nodes.size();
  if (n == 0) throw ConfigError("network has no nodes");
  auto check_node = [n](NodeId id, const std::string& what) {
    if (id >= n) throw ConfigError(what + " references missing node " + std::to_string(id));
  };
  check_node(desc_.demand_node, "demand attachment");
  check_node(desc_.output_node, "distribution output");
  if (nodes[desc_.demand_node].kind != NodeKind::kJunction) {
    throw ConfigError("demand node '" + nodes[desc_.demand_node].name + "' must be a junction");
  }

  for (const auto& link : desc_.links) {
    check_node(link.from, "link '" + link.name + "'");
    check_node(link.to, "link '" + link.name + "'");
    if (link.from == link.to) throw ConfigError("link '" + link.name + "' is a self loop");
    std::visit(Overloaded{
                   [&](const Pipe& p) {
                     if (!(p.resistance > 0.0) || !std::isfinite(p.resistance)) {
                       throw ConfigError("pipe '" + link.name + "' resistance must be positive");
                     }
                   },
                   [&](const Valve& v) {
                     if (!(v.max_conductance > 0.0) || !std::isfinite(v.max_conductance)) {
                       throw ConfigError("valve '" + link.name + "' max conductance must be positive");
                     }
                   },
                   [&](const PressurePump& p) {
                     if (p.reference) check_node(*p.reference, "pump '" + link.name + "' reference");
                     if (const auto* fixed = std::get_if<double>(&p.head); fixed && !std::isfinite(*fixed)) {
                       throw ConfigError("pump '" + link.name + "' head must be finite");
                     }
                   },
                   [](const FlowPump&) {},
               },
               link.element);
  }

  std::vector<int> tank_seen(desc_.tanks.size(), 0);
  for (const auto& node : nodes) {
    if (node.kind == NodeKind::kTank) {
      if (node.tank >= desc_.tanks.size()) throw ConfigError("node '" + node.name + "' references missing tank");
      ++tank_seen[node.tank];
    }
    if (node.kind == NodeKind::kFixed && !std::isfinite(node.fixed_pressure)) {
      throw ConfigError("fixed node '" + node.name + "' pressure must be finite");
    }
  }
  for (std::size_t t = 0; t < desc_.tanks.size(); ++t) {
    const auto& tank = desc_.tanks[t];
    if (!(tank.capacitance > 0.0) || !std::isfinite(tank.capacitance)) {
      throw ConfigError("tank '" + tank.name + "' capacitance must be positive");
    }
    check_node(tank.node, "tank '" + tank.name + "'");
    check_node(tank.tee, "tank '" + tank.name + "' tee");
    if (nodes[tank.node].kind != NodeKind::kTank || nodes[tank.node].tank != t || tank_seen[t] != 1) {
      throw ConfigError("tank '" + tank.name + "' must own exactly one tank node");
    }
  }

  // Connectivity over the undirected link graph.
  std::vector<std::vector<NodeId>> adjacency(n);
  for (const auto& link : desc_.links) {
    adjacency[link.from].push_back(link.to);
    adjacency[link.to].push_back(link.from);
  }
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    for (NodeId next : adjacency[cur]) {
      if (!seen[next]) {
        seen[next] = true;
        stack.push_back(next);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw ConfigError("network is not connected: node '" + nodes[i].name + "' unreachable");
  }
}

NodeId NetworkModel::node_id(std::string_view name) const {
  for (std::size_t i = 0; i < desc_.nodes.size(); ++i) {
    if (desc_.nodes[i].name == name) return i;
  }
  throw std::out_of_range("no node named '" + std::string(name) + "'");
}

LinkId NetworkModel::link_id(std::string_view name) const {
  for (std::size_t i = 0; i < desc_.links.size(); ++i) {
    if (desc_.links[i].name == name) return i;
  }
  throw std::out_of_range("no link named '" + std::string(name) + "'");
}

std::optional<std::size_t> NetworkModel::pressure_unknown(NodeId node) const {
  if (node_unknown_.at(node) < 0) return std::nullopt;
  return static_cast<std::size_t>(node_unknown_[node]);
}

std::optional<std::size_t> NetworkModel::flow_unknown(LinkId link) const {
  if (link_unknown_.at(link) < 0) return std::nullopt;
  return static_cast<std::size_t>(link_unknown_[link]);
}

bool NetworkModel::is_pump(LinkId link) const {
  const auto& e = desc_.links.at(link).element;
  return std::holds_alternative<PressurePump>(e) || std::holds_alternative<FlowPump>(e);
}

namespace {

// Row convention: for each junction, sum of outflows = 0 with injections moved
// to the right-hand side.
template <class Matrix, class Vector>
void assemble(const NetworkModel& model, std::span<const double> x, const ControlVector& u,
              double demand, Matrix& a, Vector& b) {
  const auto& nodes = model.nodes();

  auto known_pressure = [&](NodeId id) {
    const Node& node = nodes[id];
    return node.kind == NodeKind::kTank ? x[node.tank] : node.fixed_pressure;
  };
  auto row = [&](NodeId id) { return model.pressure_unknown(id); };

  auto stamp_conductance = [&](NodeId from, NodeId to, double g) {
    if (g == 0.0) return;
    auto rf = row(from);
    auto rt = row(to);
    if (rf) {
      a(*rf, *rf) += g;
      if (rt) a(*rf, *rt) -= g;
      else b(*rf) += g * known_pressure(to);
    }
    if (rt) {
      a(*rt, *rt) += g;
      if (rf) a(*rt, *rf) -= g;
      else b(*rt) += g * known_pressure(from);
    }
  };

  auto inject = [&](NodeId from, NodeId to, double flow) {
    if (auto rf = row(from)) b(*rf) -= flow;
    if (auto rt = row(to)) b(*rt) += flow;
  };

  const auto& links = model.links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    const Link& link = links[li];
    std::visit(Overloaded{
                   [&](const Pipe& p) { stamp_conductance(link.from, link.to, 1.0 / p.resistance); },
                   [&](const Valve& v) { stamp_conductance(link.from, link.to, u[v.control]); },
                   [&](const FlowPump& p) { inject(link.from, link.to, u[p.control]); },
                   [&](const PressurePump& p) {
                     const std::size_t k = *model.flow_unknown(li);
                     if (auto rf = row(link.from)) a(*rf, k) += 1.0;
                     if (auto rt = row(link.to)) a(*rt, k) -= 1.0;
                     // P_to - P_ref = head
                     const NodeId ref = p.reference.value_or(link.from);
                     double rhs = head_value(p, u);
                     if (auto rt = row(link.to)) a(k, *rt) += 1.0;
                     else rhs -= known_pressure(link.to);
                     if (auto rr = row(ref)) a(k, *rr) -= 1.0;
                     else rhs += known_pressure(ref);
                     b(k) = rhs;
                   },
               },
               link.element);
  }
  if (auto rd = row(model.demand_node())) b(*rd) -= demand;
}

[[noreturn]] void diagnose_singular(const NetworkModel& model, const Eigen::MatrixXd& a) {
  auto describe = [&](std::size_t unknown) -> std::string {
    for (std::size_t i = 0; i < model.nodes().size(); ++i) {
      if (model.pressure_unknown(i) == unknown) return model.nodes()[i].name;
    }
    for (std::size_t i = 0; i < model.links().size(); ++i) {
      if (model.flow_unknown(i) == unknown) return model.links()[i].name;
    }
    return "?";
  };
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (a.row(r).cwiseAbs().maxCoeff() == 0.0 && a.col(r).cwiseAbs().maxCoeff() == 0.0) {
      const std::string name = describe(static_cast<std::size_t>(r));
      throw SolverError("singular nodal matrix: node '" + name + "' is isolated", name);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd kernel = lu.kernel();
  Eigen::Index worst = 0;
  kernel.col(0).cwiseAbs().maxCoeff(&worst);
  const std::string name = describe(static_cast<std::size_t>(worst));
  throw SolverError("singular nodal matrix: pressure at '" + name + "' is undetermined", name);
}

template <class Matrix, class Vector>
void solve_dense(const NetworkModel& model, std::span<const double> x, const ControlVector& u,
                 double demand, Vector& solution) {
  const auto n = static_cast<Eigen::Index>(model.unknown_count());
  Matrix a = Matrix::Zero(n, n);
  Vector b = Vector::Zero(n);
  assemble(model, x, u, demand, a, b);
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!(lu.rcond() > 1e-14)) diagnose_singular(model, Eigen::MatrixXd(a));
  solution = lu.solve(b);
}

}  // namespace

void solve_flows(const NetworkModel& model, std::span<const double> tank_pressures,
                 const ControlVector& u, double demand, HydraulicSolution& out) {
  if (tank_pressures.size() != model.tanks().size()) {
    throw std::invalid_argument("expected one pressure per tank");
  }
  if (!(demand >= 0.0) || !std::isfinite(demand)) throw std::invalid_argument("demand must be >= 0");
  for (std::size_t i = 0; i < kControlCount; ++i) {
    if (!(u.values[i] >= 0.0) || !std::isfinite(u.values[i])) {
      throw std::invalid_argument("control '" + std::string(control_name(static_cast<ControlIndex>(i))) +
                                  "' must be finite and >= 0");
    }
  }
  for (const auto& link : model.links()) {
    if (const auto* v = std::get_if<Valve>(&link.element); v && u[v->control] > v->max_conductance) {
      throw std::invalid_argument("valve '" + link.name + "' conductance above its maximum");
    }
  }

  const std::size_t n = model.unknown_count();
  std::array<double, kStackUnknowns> small{};
  Eigen::VectorXd large;
  std::span<const double> z;
  if (n <= kStackUnknowns) {
    using M = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kStackUnknowns, kStackUnknowns>;
    using V = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kStackUnknowns, 1>;
    V sol;
    solve_dense<M, V>(model, tank_pressures, u, demand, sol);
    std::copy(sol.data(), sol.data() + n, small.begin());
    z = std::span<const double>(small.data(), n);
  } else {
    solve_dense<Eigen::MatrixXd, Eigen::VectorXd>(model, tank_pressures, u, demand, large);
    z = std::span<const double>(large.data(), n);
  }

  const auto& nodes = model.nodes();
  out.node_pressures.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (auto k = model.pressure_unknown(i)) out.node_pressures[i] = z[*k];
    else if (nodes[i].kind == NodeKind::kTank) out.node_pressures[i] = tank_pressures[nodes[i].tank];
    else out.node_pressures[i] = nodes[i].fixed_pressure;
  }

  const auto& links = model.links();
  out.link_flows.resize(links.size());
  out.pump_powers.assign(links.size(), 0.0);
  out.total_power = 0.0;
  const auto& p = out.node_pressures;
  for (std::size_t li = 0; li < links.size(); ++li) {
    const Link& link = links[li];
    const double drop = p[link.from] - p[link.to];
    double flow = 0.0;
    bool pump = false;
    std::visit(Overloaded{
                   [&](const Pipe& e) { flow = drop / e.resistance; },
                   [&](const Valve& e) { flow = u[e.control] * drop; },
                   [&](const FlowPump& e) {
                     flow = u[e.control];
                     pump = true;
                   },
                   [&](const PressurePump&) {
                     flow = z[*model.flow_unknown(li)];
                     pump = true;
                   },
               },
               link.element);
    out.link_flows[li] = flow;
    if (pump) {
      out.pump_powers[li] = flow * (p[link.to] - p[link.from]);
      out.total_power += std::max(0.0, out.pump_powers[li]);
    }
  }
  out.demand = demand;
  out.distribution_pressure = p[model.output_node()];
}

HydraulicSolution solve_flows(const NetworkModel& model, std::span<const double> tank_pressures,
                              const ControlVector& u, double demand) {
  HydraulicSolution out;
  solve_flows(model, tank_pressures, u, demand, out);
  return out;
}

std::vector<double> nodal_imbalance(const NetworkModel& model, const HydraulicSolution& sol) {
  std::vector<double> balance(model.nodes().size(), 0.0);
  const auto& links = model.links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    balance[links[li].from] -= sol.link_flows[li];
    balance[links[li].to] += sol.link_flows[li];
  }
  balance[model.demand_node()] -= sol.demand;
  return balance;
}

std::vector<double> tank_net_inflows(const NetworkModel& model, const HydraulicSolution& sol) {
  std::vector<double> inflow(model.tanks().size(), 0.0);
  const auto& nodes = model.nodes();
  const auto& links = model.links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    const Link& link = links[li];
    if (nodes[link.to].kind == NodeKind::kTank) inflow[nodes[link.to].tank] += sol.link_flows[li];
    if (nodes[link.from].kind == NodeKind::kTank) inflow[nodes[link.from].tank] -= sol.link_flows[li];
  }
  return inflow;
}

std::vector<double> step_tanks(const NetworkModel& model, std::span<const double> tank_pressures,
                               const HydraulicSolution& sol, double dt_minutes) {
  if (!(dt_minutes > 0.0)) throw std::invalid_argument("time step must be positive");
  const auto inflow = tank_net_inflows(model, sol);
  std::vector<double> next(tank_pressures.begin(), tank_pressures.end());
  for (std::size_t j = 0; j < next.size(); ++j) {
    next[j] = tank_pressures[j] + model.tanks()[j].capacitance * dt_minutes * inflow[j];
  }
  return next;
}

PumpPower pump_power(const HydraulicSolution& sol) {
  return {sol.total_power, units::psi_gpm_to_kw(sol.total_power)};
}

NetworkModel build_example_plant(const PlantParameters& params) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(params.source_pressure, "source pressure");
  positive(params.treatment_resistance, "treatment resistance");
  positive(params.distribution_resistance, "distribution resistance");
  positive(params.tank_capacitance[0], "tank 1 capacitance");
  positive(params.tank_capacitance[1], "tank 2 capacitance");
  positive(params.valve_max_conductance[0], "tank 1 valve max conductance");
  positive(params.valve_max_conductance[1], "tank 2 valve max conductance");

  namespace pn = plant_names;
  enum : NodeId { kReservoir, kSource, kTreated, kBooster, kDistribution, kTank1, kTank2 };

  NetworkDescription d;
  d.nodes = {
      {std::string(pn::kReservoir), NodeKind::kFixed, 0.0, 0},
      {std::string(pn::kSource), NodeKind::kJunction, 0.0, 0},
      {std::string(pn::kTreated), NodeKind::kJunction, 0.0, 0},
      {std::string(pn::kBooster), NodeKind::kJunction, 0.0, 0},
      {std::string(pn::kDistribution), NodeKind::kJunction, 0.0, 0},
      {std::string(pn::kTank1), NodeKind::kTank, 0.0, 0},
      {std::string(pn::kTank2), NodeKind::kTank, 0.0, 1},
  };
  d.links = {
      {"source_pump", kReservoir, kSource, PressurePump{params.source_pressure, std::nullopt}},
      {std::string(pn::kTreatment), kSource, kTreated, Pipe{params.treatment_resistance}},
      {"booster_pump", kTreated, kBooster, PressurePump{ControlIndex::kBoosterPressure, kSource}},
      {"distribution_pipe", kBooster, kDistribution, Pipe{params.distribution_resistance}},
      {"inlet_pump1", kSource, kTank1, FlowPump{ControlIndex::kInletFlow1}},
      {"outlet_valve1", kTank1, kSource,
       Valve{ControlIndex::kOutletConductance1, params.valve_max_conductance[0]}},
      {"inlet_pump2", kDistribution, kTank2, FlowPump{ControlIndex::kInletFlow2}},
      {"outlet_valve2", kTank2, kDistribution,
       Valve{ControlIndex::kOutletConductance2, params.valve_max_conductance[1]}},
  };
  d.tanks = {
      {"tank1", params.tank_capacitance[0], kTank1, kSource},
      {"tank2", params.tank_capacitance[1], kTank2, kDistribution},
  };
  d.demand_node = kDistribution;
  d.output_node = kDistribution;
  return NetworkModel(std::move(d));
}

double closed_form_distribution_pressure(double tank2_pressure, const ControlVector& u,
                                         double demand, double source_pressure,
                                         double distribution_resistance) {
  const double r2 = u[ControlIndex::kOutletConductance2];
  const double fp2 = u[ControlIndex::kInletFlow2];
  const double pb = u[ControlIndex::kBoosterPressure];
  const double R = distribution_resistance;
  return (source_pressure + pb - R * (demand + fp2 - r2 * tank2_pressure)) / (1.0 + r2 * R);
}

double hazen_williams_drop(double diameter_in, double length_ft, double roughness,
                           double flow_gpm) {
  // US customary form: psi per foot = 4.52 Q^1.852 / (C^1.852 d^4.87).
  return length_ft * 4.52 * std::pow(flow_gpm, 1.852) /
         (std::pow(roughness, 1.852) * std::pow(diameter_in, 4.87));
}

double hazen_williams_resistance(double diameter_in, double length_ft, double roughness,
                                 double flow_gpm) {
  if (!(flow_gpm > 0.0)) throw std::invalid_argument("linearization flow must be positive");
  return 1.852 * hazen_williams_drop(diameter_in, length_ft, roughness, flow_gpm) / flow_gpm;
}

double capacitance_from_time_constant(double tau_minutes, double conductance) {
  if (!(tau_minutes > 0.0) || !(conductance > 0.0)) {
    throw ConfigError("tank time constant and valve conductance must be positive");
  }
  return 1.0 / (tau_minutes * conductance);
}

}  // namespace wtp
