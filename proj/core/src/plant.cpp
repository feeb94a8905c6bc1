#include "wtp/plant.hpp"

#include <algorithm>

#include "wtp/units.hpp"

namespace wtp {

Plant make_example_plant(const PlantParameters& params, const QualityParameters& quality) {
  NetworkModel network = build_example_plant(params);
  const LinkId treatment = network.link_id(plant_names::kTreatment);
  std::vector<NodeId> monitored{network.node_id(plant_names::kDistribution),
                                network.node_id(plant_names::kSource)};
  return Plant{std::move(network), quality, treatment, std::move(monitored)};
}

void advance(const Plant& plant, PlantState& state, const ControlVector& u, double demand,
             double phi, double dt_minutes, StepOutputs& out) {
  const NetworkModel& net = plant.network;
  solve_flows(net, state.tank_pressures, u, demand, out.hydraulics);
  const auto& flows = out.hydraulics.link_flows;

  const PumpPower power = pump_power(out.hydraulics);
  out.power_kw = power.kw;
  out.emissions_rate = phi * power.kw;

  // Quality tank: split its branch flows into in/out and mix the water that
  // reaches the tee (treated stream plus whatever the tank itself releases).
  const Tank& qtank = net.tanks().at(plant.quality.tank);
  double inflow = 0.0;
  double outflow = 0.0;
  double tee_other_in = 0.0;
  const auto& links = net.links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    const Link& link = links[li];
    const double f = flows[li];
    if (link.to == qtank.node) (f >= 0.0 ? inflow : outflow) += std::abs(f);
    else if (link.from == qtank.node) (f >= 0.0 ? outflow : inflow) += std::abs(f);
    else if (link.to == qtank.tee && f > 0.0) tee_other_in += f;
    else if (link.from == qtank.tee && f < 0.0) tee_other_in -= f;
  }

  const FlowSlot treated = state.delay.push_pop({flows[plant.treatment_link], plant.quality.dose});
  out.treated_concentration = treated.concentration;
  const double tee_total = tee_other_in + outflow;
  const double tee_concentration =
      tee_total > 0.0 ? (treated.concentration * tee_other_in + state.chlorine * outflow) / tee_total
                      : treated.concentration;

  const ChlorineState before{state.chlorine, state.tank_pressures[plant.quality.tank] / qtank.capacitance};
  const ChlorineUpdate chlorine = step_chlorine(before, inflow, tee_concentration, outflow, dt_minutes,
                                                plant.quality.decay_per_day, plant.quality.mode);
  state.chlorine = chlorine.state.concentration;
  out.chlorine_clamped = chlorine.clamped;

  out.tank_inflows = tank_net_inflows(net, out.hydraulics);
  for (std::size_t j = 0; j < state.tank_pressures.size(); ++j) {
    state.tank_pressures[j] += net.tanks()[j].capacitance * dt_minutes * out.tank_inflows[j];
  }
}

StepOutputs advance(const Plant& plant, PlantState& state, const ControlVector& u, double demand,
                    double phi, double dt_minutes) {
  StepOutputs out;
  advance(plant, state, u, demand, phi, dt_minutes, out);
  return out;
}

}  // namespace wtp
