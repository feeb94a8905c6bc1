#pragma once

#include <cstddef>
#include <vector>

namespace wtp {

enum class ChlorineMode {
  kWellMixed,     // dy/dt = inflow (c_in - y) / V - K y
  kPaperLiteral,  // dy/dt = inflow c_in - K y
};

struct ChlorineState {
  double concentration = 0.0;  // y_C, mg per gallon
  double volume = 0.0;         // gallons (x / C proxy)
};

struct ChlorineUpdate {
  ChlorineState state;
  bool clamped = false;  // Euler undershoot was clamped to zero
};

// One explicit-Euler step of tank chlorine. `decay_per_day` is K in 1/day.
// Outflow leaves at the tank concentration, so it does not change y_C in the
// well-mixed form; it is accepted for mass bookkeeping by callers.
ChlorineUpdate step_chlorine(const ChlorineState& state, double inflow, double inflow_concentration,
                             double outflow, double dt_minutes, double decay_per_day,
                             ChlorineMode mode = ChlorineMode::kWellMixed);

struct FlowSlot {
  double flow = 0.0;           // GPM
  double concentration = 0.0;  // mg per gallon

  friend bool operator==(const FlowSlot&, const FlowSlot&) = default;
};

// Fixed-length FIFO modelling the flocculation detention time.
class TransportDelay {
 public:
  TransportDelay() = default;
  TransportDelay(double detention_minutes, double dt_minutes, FlowSlot fill);

  // Appends `in` and returns the slot pushed detention-time earlier.
  FlowSlot push_pop(FlowSlot in);

  std::size_t length() const { return slots_.size(); }
  double detention_minutes() const { return detention_; }

  // Slots still in transit, oldest first.
  std::vector<FlowSlot> contents() const;

  friend bool operator==(const TransportDelay&, const TransportDelay&) = default;

 private:
  std::vector<FlowSlot> slots_;
  std::size_t head_ = 0;  // index of the oldest slot
  double detention_ = 0.0;
};

}  // namespace wtp
