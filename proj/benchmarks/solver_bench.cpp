#include <benchmark/benchmark.h>

#include "wtp/control.hpp"
#include "wtp/sim.hpp"

namespace {

const wtp::Scenario& scenario() {
  static const wtp::Scenario s = wtp::default_scenario();
  return s;
}

wtp::PlantState initial_state(const wtp::Scenario& s) {
  wtp::PlantState st;
  st.tank_pressures = s.initial_tank_pressures;
  st.chlorine = s.initial_chlorine;
  st.delay = wtp::TransportDelay(s.quality.detention_minutes, s.dt_minutes, {0.0, s.quality.dose});
  st.memory.filtered = s.initial_control;
  return st;
}

void BM_SolveFlows(benchmark::State& state) {
  const auto net = wtp::build_example_plant(scenario().plant);
  const std::vector<double> x{85.0, 88.0};
  const wtp::ControlVector u{{10, 500, 500, 100, 200}};
  wtp::HydraulicSolution sol;
  for (auto _ : state) {
    wtp::solve_flows(net, x, u, 3500.0, sol);
    benchmark::DoNotOptimize(sol.distribution_pressure);
  }
}
BENCHMARK(BM_SolveFlows);

void BM_Predict(benchmark::State& state) {
  const auto& s = scenario();
  const auto plant = wtp::make_example_plant(s.plant, s.quality);
  const wtp::ExogenousInputs exo{s.demand, s.intensity, s.dt_minutes};
  const auto st = initial_state(s);
  const wtp::ControlVector u{{10, 500, 500, 100, 200}};
  for (auto _ : state) {
    auto r = wtp::predict(plant, st, u, exo, 100, static_cast<int>(state.range(0)), s.mpc);
    benchmark::DoNotOptimize(r.cost);
  }
}
BENCHMARK(BM_Predict)->Arg(2)->Arg(8);

void BM_MpcStep(benchmark::State& state) {
  const auto& s = scenario();
  const auto plant = wtp::make_example_plant(s.plant, s.quality);
  const wtp::ExogenousInputs exo{s.demand, s.intensity, s.dt_minutes};
  const auto st = initial_state(s);
  auto cfg = s.mpc;
  cfg.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    auto d = wtp::mpc_step(plant, st, exo, 100, cfg);
    benchmark::DoNotOptimize(d.applied);
  }
}
BENCHMARK(BM_MpcStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ReactiveDay(benchmark::State& state) {
  auto s = scenario();
  s.controller = wtp::ControllerKind::kReactive;
  s.duration_hours = 24.0;
  for (auto _ : state) {
    auto trace = wtp::run(s);
    benchmark::DoNotOptimize(trace.records.size());
  }
}
BENCHMARK(BM_ReactiveDay)->Unit(benchmark::kMillisecond);

}  // namespace
