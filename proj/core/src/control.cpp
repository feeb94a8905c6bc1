#include "wtp/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "wtp/errors.hpp"

namespace wtp {

void MpcConfig::validate() const {
  if (weights.chlorine < 0.0 || weights.pressure < 0.0 || weights.emissions < 0.0) {
    throw ConfigError("controller.mpc: weights must be >= 0");
  }
  if (horizon < 1) throw ConfigError("controller.mpc.horizon_steps must be >= 1");
  for (int r : resolution) {
    if (r < 2) throw ConfigError("controller.mpc.mesh_resolution must be >= 2");
  }
  for (std::size_t i = 0; i < kControlCount; ++i) {
    if (!(bounds.lower.values[i] >= 0.0) || !(bounds.lower.values[i] <= bounds.upper.values[i])) {
      throw ConfigError("control bounds for '" + std::string(control_name(static_cast<ControlIndex>(i))) +
                        "' must satisfy 0 <= lower <= upper");
    }
  }
  if (!(tank_min < tank_max)) throw ConfigError("controller.mpc: tank_min_psi must be < tank_max_psi");
  if (!(pipe_min < pipe_max)) throw ConfigError("controller.mpc: pipe_min_psi must be < pipe_max_psi");
  if (!(lowpass_alpha > 0.0 && lowpass_alpha <= 1.0)) {
    throw ConfigError("controller.mpc.lowpass_alpha must be in (0, 1]");
  }
  if (threads < 1) throw ConfigError("controller.mpc.threads must be >= 1");
}

double stage_cost(const OutputVector& out, const MpcConfig& cfg) {
  const auto& w = cfg.weights;
  return w.chlorine * out.chlorine_error * out.chlorine_error +
         w.pressure * out.pressure_error * out.pressure_error +
         w.emissions * out.emissions_rate * out.emissions_rate;
}

namespace {

double bound_excess(double value, double lo, double hi) {
  return std::max({0.0, lo - value, value - hi});
}

struct RolloutWorkspace {
  PlantState state;
  StepOutputs step;
  OutputVector out;
};

// Shared by predict() and the mesh search so both produce identical costs.
MeshEvaluation rollout(const Plant& plant, const PlantState& initial, const ControlVector& u,
                       const ExogenousInputs& exo, std::size_t k, int horizon, const MpcConfig& cfg,
                       RolloutWorkspace& ws, RolloutResult* record) {
  ws.state = initial;
  MeshEvaluation eval;
  double worst = 0.0;
  for (int j = 0; j < horizon; ++j) {
    const std::size_t step = k + static_cast<std::size_t>(j);
    advance(plant, ws.state, u, exo.demand_at_step(step), exo.phi_at_step(step), exo.dt_minutes, ws.step);

    const auto& pressures = ws.step.hydraulics.node_pressures;
    ws.out.pressure_error = cfg.pressure_setpoint - ws.step.hydraulics.distribution_pressure;
    ws.out.chlorine_error = cfg.chlorine_setpoint - ws.state.chlorine;
    ws.out.emissions_rate = ws.step.emissions_rate;
    ws.out.pipe_pressures.resize(plant.monitored_nodes.size());
    for (std::size_t m = 0; m < plant.monitored_nodes.size(); ++m) {
      ws.out.pipe_pressures[m] = pressures[plant.monitored_nodes[m]];
      worst = std::max(worst, bound_excess(ws.out.pipe_pressures[m], cfg.pipe_min, cfg.pipe_max));
    }
    for (double x : ws.state.tank_pressures) worst = std::max(worst, bound_excess(x, cfg.tank_min, cfg.tank_max));
    eval.cost += stage_cost(ws.out, cfg);

    if (record) {
      record->outputs.push_back(ws.out);
      record->tank_pressures.push_back(ws.state.tank_pressures);
      record->chlorine.push_back(ws.state.chlorine);
    }
  }
  eval.worst_violation = worst;
  eval.feasible = worst == 0.0;
  return eval;
}

}  // namespace

RolloutResult predict(const Plant& plant, const PlantState& state, const ControlVector& u,
                      const ExogenousInputs& exo, std::size_t k, int horizon, const MpcConfig& cfg) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  RolloutResult result;
  RolloutWorkspace ws;
  const MeshEvaluation eval = rollout(plant, state, u, exo, k, horizon, cfg, ws, &result);
  result.cost = eval.cost;
  result.feasible = eval.feasible;
  result.worst_violation = eval.worst_violation;
  return result;
}

ControlMesh::ControlMesh(const ControlBounds& bounds, const std::array<int, kControlCount>& resolution) {
  for (std::size_t d = 0; d < kControlCount; ++d) {
    if (resolution[d] < 1) throw std::invalid_argument("mesh resolution must be >= 1");
    const auto n = static_cast<std::size_t>(resolution[d]);
    const double lo = bounds.lower.values[d];
    const double hi = bounds.upper.values[d];
    auto& axis = axes_[d];
    axis.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      axis[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    if (n > 1) axis.back() = hi;
    size_ *= n;
  }
}

std::array<std::size_t, kControlCount> ControlMesh::unflatten(std::size_t flat) const {
  std::array<std::size_t, kControlCount> index{};
  for (std::size_t d = kControlCount; d-- > 0;) {
    const std::size_t n = axes_[d].size();
    index[d] = flat % n;
    flat /= n;
  }
  return index;
}

ControlVector ControlMesh::point(std::size_t flat) const {
  const auto index = unflatten(flat);
  ControlVector u;
  for (std::size_t d = 0; d < kControlCount; ++d) u.values[d] = axes_[d][index[d]];
  return u;
}

MeshChoice mesh_search(const ControlMesh& mesh,
                       const std::function<MeshEvaluation(const ControlVector&)>& evaluate,
                       unsigned threads) {
  const std::size_t m = mesh.size();
  if (m == 0) throw std::invalid_argument("empty control mesh");
  std::vector<MeshEvaluation> evals(m);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) evals[i] = evaluate(mesh.point(i));
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m)));
  if (threads == 1) {
    work(0, m);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (m + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(m, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  std::size_t best = m;
  for (std::size_t i = 0; i < m; ++i) {
    if (evals[i].feasible && (best == m || evals[i].cost < evals[best].cost)) best = i;
  }
  bool fallback = false;
  if (best == m) {
    fallback = true;
    best = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (evals[i].worst_violation < evals[best].worst_violation) best = i;
    }
  }
  return MeshChoice{mesh.point(best), mesh.unflatten(best), best, evals[best], fallback};
}

ControlVector lowpass(const ControlVector& previous, const ControlVector& target, double alpha,
                      const ControlBounds& bounds) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("low-pass alpha must be in (0, 1]");
  ControlVector out;
  for (std::size_t i = 0; i < kControlCount; ++i) {
    out.values[i] = alpha * target.values[i] + (1.0 - alpha) * previous.values[i];
  }
  return bounds.clamp(out);
}

MpcDecision mpc_step(const Plant& plant, const PlantState& state, const ExogenousInputs& exo,
                     std::size_t k, const MpcConfig& cfg) {
  const ControlMesh mesh(cfg.bounds, cfg.resolution);
  const ControlVector& previous = state.memory.filtered;
  auto evaluate = [&](const ControlVector& candidate) {
    thread_local RolloutWorkspace ws;
    const ControlVector applied = lowpass(previous, candidate, cfg.lowpass_alpha, cfg.bounds);
    return rollout(plant, state, applied, exo, k, cfg.horizon, cfg, ws, nullptr);
  };
  MpcDecision decision;
  decision.choice = mesh_search(mesh, evaluate, cfg.threads);
  decision.applied = lowpass(previous, decision.choice.point, cfg.lowpass_alpha, cfg.bounds);
  return decision;
}

void ReactiveConfig::validate() const {
  const std::size_t n = low_threshold.size();
  if (high_threshold.size() != n || fill_flow.size() != n || valve_open.size() != n || n > 2) {
    throw ConfigError("controller.reactive: per-tank settings must agree in length (at most 2 tanks)");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(low_threshold[j] < high_threshold[j])) {
      throw ConfigError("controller.reactive: tank" + std::to_string(j + 1) + " low threshold must be < high");
    }
    if (fill_flow[j] < 0.0 || valve_open[j] < 0.0) {
      throw ConfigError("controller.reactive: tank" + std::to_string(j + 1) + " pump/valve settings must be >= 0");
    }
  }
  if (kp < 0.0 || ki < 0.0) throw ConfigError("controller.reactive: PI gains must be >= 0");
  if (!(booster_min <= bias && bias <= booster_max)) {
    throw ConfigError("controller.reactive: booster bias must lie within the booster bounds");
  }
}

ControlVector reactive_step(PlantState& state, double measured_distribution_pressure,
                            const ReactiveConfig& cfg, double dt_minutes) {
  auto& modes = state.memory.tank_modes;
  const std::size_t tanks = cfg.low_threshold.size();
  if (modes.size() != tanks) modes.assign(tanks, TankMode::kFilling);

  ControlVector u;
  for (std::size_t j = 0; j < tanks; ++j) {
    const double x = state.tank_pressures.at(j);
    if (modes[j] == TankMode::kFilling && x >= cfg.high_threshold[j]) modes[j] = TankMode::kDraining;
    else if (modes[j] == TankMode::kDraining && x <= cfg.low_threshold[j]) modes[j] = TankMode::kFilling;
    if (modes[j] == TankMode::kFilling) u.values[1 + j] = cfg.fill_flow[j];
    else u.values[3 + j] = cfg.valve_open[j];
  }

  const double error = cfg.pressure_setpoint - measured_distribution_pressure;
  double integral = state.memory.pi_integral + error * dt_minutes;
  if (cfg.ki > 0.0) {
    integral = std::clamp(integral, (cfg.booster_min - cfg.bias) / cfg.ki, (cfg.booster_max - cfg.bias) / cfg.ki);
  }
  state.memory.pi_integral = integral;
  u[ControlIndex::kBoosterPressure] =
      std::clamp(cfg.bias + cfg.kp * error + cfg.ki * integral, cfg.booster_min, cfg.booster_max);
  return u;
}

}  // namespace wtp
