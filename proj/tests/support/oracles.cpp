#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

namespace oracle {

double distribution_pressure(double ps, double pb, double r, double demand, double fp2, double r2, double x2) {
  return (ps + pb - r * (demand + fp2 - r2 * x2)) / (1.0 + r2 * r);
}

std::vector<double> junction_balance(const wtp::NetworkModel& model, const wtp::HydraulicSolution& sol) {
  std::vector<double> sum(model.nodes().size(), 0.0);
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    const auto& link = model.links()[i];
    sum[link.from] -= sol.link_flows[i];
    sum[link.to] += sol.link_flows[i];
  }
  sum[model.demand_node()] -= sol.demand;
  return sum;
}

double worst_relative_imbalance(const wtp::NetworkModel& model, const wtp::HydraulicSolution& sol) {
  const auto sum = junction_balance(model, sol);
  double scale = std::max(1.0, sol.demand);
  for (double f : sol.link_flows) scale = std::max(scale, std::abs(f));
  double worst = 0.0;
  for (std::size_t n = 0; n < sum.size(); ++n) {
    if (model.nodes()[n].kind == wtp::NodeKind::kJunction) worst = std::max(worst, std::abs(sum[n]) / scale);
  }
  return worst;
}

double decayed(double y0, double k_per_day, double minutes) { return y0 * std::exp(-k_per_day * minutes / 1440.0); }

double hazen_williams_slope(double diameter_in, double length_ft, double roughness, double flow_gpm) {
  const double h = flow_gpm * 1e-5;
  return (wtp::hazen_williams_drop(diameter_in, length_ft, roughness, flow_gpm + h) -
          wtp::hazen_williams_drop(diameter_in, length_ft, roughness, flow_gpm - h)) /
         (2.0 * h);
}

namespace {

double axis_value(const wtp::MpcConfig& cfg, std::size_t dim, int i) {
  const double lo = cfg.bounds.lower.values[dim];
  const double hi = cfg.bounds.upper.values[dim];
  const int n = cfg.resolution[dim];
  if (i == n - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

struct Score {
  double cost = 0.0;
  double violation = 0.0;
};

Score score(const wtp::Plant& plant, const wtp::PlantState& start, const wtp::ControlVector& u,
            const wtp::ExogenousInputs& exo, std::size_t k, const wtp::MpcConfig& cfg) {
  wtp::PlantState s = start;
  Score out;
  auto excess = [](double v, double lo, double hi) { return std::max({0.0, lo - v, v - hi}); };
  for (int j = 0; j < cfg.horizon; ++j) {
    const std::size_t step = k + static_cast<std::size_t>(j);
    const auto r = wtp::advance(plant, s, u, exo.demand_at_step(step), exo.phi_at_step(step), exo.dt_minutes);
    const double ed = cfg.pressure_setpoint - r.hydraulics.distribution_pressure;
    const double ec = cfg.chlorine_setpoint - s.chlorine;
    out.cost += cfg.weights.chlorine * ec * ec + cfg.weights.pressure * ed * ed +
                cfg.weights.emissions * r.emissions_rate * r.emissions_rate;
    for (auto node : plant.monitored_nodes) {
      out.violation = std::max(out.violation, excess(r.hydraulics.node_pressures[node], cfg.pipe_min, cfg.pipe_max));
    }
    for (double x : s.tank_pressures) out.violation = std::max(out.violation, excess(x, cfg.tank_min, cfg.tank_max));
  }
  return out;
}

}  // namespace

BruteForceChoice brute_force_mpc(const wtp::Plant& plant, const wtp::PlantState& state,
                                 const wtp::ExogenousInputs& exo, std::size_t k, const wtp::MpcConfig& cfg) {
  const auto& prev = state.memory.filtered;
  const double a = cfg.lowpass_alpha;
  BruteForceChoice best_feasible{{}, std::numeric_limits<double>::infinity(), false};
  bool have_feasible = false;
  BruteForceChoice least_bad{{}, 0.0, true};
  double least_violation = std::numeric_limits<double>::infinity();

  int i[wtp::kControlCount];
  for (i[0] = 0; i[0] < cfg.resolution[0]; ++i[0])
    for (i[1] = 0; i[1] < cfg.resolution[1]; ++i[1])
      for (i[2] = 0; i[2] < cfg.resolution[2]; ++i[2])
        for (i[3] = 0; i[3] < cfg.resolution[3]; ++i[3])
          for (i[4] = 0; i[4] < cfg.resolution[4]; ++i[4]) {
            wtp::ControlVector raw;
            wtp::ControlVector applied;
            for (std::size_t d = 0; d < wtp::kControlCount; ++d) {
              raw.values[d] = axis_value(cfg, d, i[d]);
              const double f = a * raw.values[d] + (1.0 - a) * prev.values[d];
              applied.values[d] = std::clamp(f, cfg.bounds.lower.values[d], cfg.bounds.upper.values[d]);
            }
            const Score sc = score(plant, state, applied, exo, k, cfg);
            if (sc.violation == 0.0) {
              if (!have_feasible || sc.cost < best_feasible.cost) best_feasible = {raw, sc.cost, false};
              have_feasible = true;
            } else if (sc.violation < least_violation) {
              least_violation = sc.violation;
              least_bad = {raw, sc.cost, true};
            }
          }
  return have_feasible ? best_feasible : least_bad;
}

double Lcg::uniform(double lo, double hi) {
  s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
  const double unit = static_cast<double>(s_ >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

}  // namespace oracle
