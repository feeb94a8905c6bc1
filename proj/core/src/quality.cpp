#include "wtp/quality.hpp"

#include <cmath>
#include <stdexcept>

#include "wtp/errors.hpp"
#include "wtp/units.hpp"

namespace wtp {

ChlorineUpdate step_chlorine(const ChlorineState& state, double inflow, double inflow_concentration,
                             double outflow, double dt_minutes, double decay_per_day,
                             ChlorineMode mode) {
  if (!(inflow >= 0.0) || !(outflow >= 0.0)) throw std::invalid_argument("flows must be >= 0");
  if (!(decay_per_day >= 0.0)) throw std::invalid_argument("decay rate must be >= 0");
  if (!(dt_minutes > 0.0)) throw std::invalid_argument("time step must be positive");
  const double k = units::per_day_to_per_minute(decay_per_day);
  if (!(k * dt_minutes < 1.0)) throw std::invalid_argument("K * dt must be < 1 for explicit Euler");

  double rate = -k * state.concentration;
  if (mode == ChlorineMode::kWellMixed) {
    if (!(state.volume > 0.0)) throw QualityError("tank volume must be positive (empty tank)");
    rate += inflow * (inflow_concentration - state.concentration) / state.volume;
  } else {
    rate += inflow * inflow_concentration;
  }

  ChlorineUpdate out{state, false};
  out.state.concentration = state.concentration + dt_minutes * rate;
  if (out.state.concentration < 0.0) {
    out.state.concentration = 0.0;
    out.clamped = true;
  }
  return out;
}

TransportDelay::TransportDelay(double detention_minutes, double dt_minutes, FlowSlot fill)
    : detention_(detention_minutes) {
  if (!(dt_minutes > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(detention_minutes >= 0.0)) throw std::invalid_argument("detention time must be >= 0");
  const double steps = detention_minutes / dt_minutes;
  const double whole = std::round(steps);
  if (std::abs(steps - whole) > 1e-9 * std::max(1.0, steps)) {
    throw std::invalid_argument("detention time must be a whole number of time steps");
  }
  slots_.assign(static_cast<std::size_t>(whole), fill);
}

FlowSlot TransportDelay::push_pop(FlowSlot in) {
  if (slots_.empty()) return in;
  FlowSlot out = slots_[head_];
  slots_[head_] = in;
  head_ = (head_ + 1) % slots_.size();
  return out;
}

std::vector<FlowSlot> TransportDelay::contents() const {
  std::vector<FlowSlot> out;
  out.reserve(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) out.push_back(slots_[(head_ + i) % slots_.size()]);
  return out;
}

}  // namespace wtp
