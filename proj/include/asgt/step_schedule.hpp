#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "asgt/scheduler.hpp"

namespace asgt {

enum class StepMode { power_decay, stepwise, constant };

std::string_view to_string(StepMode mode);
StepMode parse_step_mode(std::string_view name);

/// Step size indexed by the global event counter k.
///   power-decay: gamma0 / (k+1)^alpha
///   stepwise:    gamma0 / factor^floor(k / interval)
///   constant:    gamma0
/// With freeze_after set, the step is 0 from that event on.
struct StepSchedule {
  StepMode mode = StepMode::power_decay;
  double gamma0 = 0.5;
  double alpha = 0.6;
  std::size_t interval = 5000;
  double factor = 2.0;
  std::optional<Stamp> freeze_after;

  static StepSchedule power_decay(double gamma0, double alpha) {
    StepSchedule s;
    s.gamma0 = gamma0;
    s.alpha = alpha;
    return s;
  }
  static StepSchedule stepwise(double gamma0, std::size_t interval, double factor) {
    StepSchedule s;
    s.mode = StepMode::stepwise;
    s.gamma0 = gamma0;
    s.interval = interval;
    s.factor = factor;
    return s;
  }
  static StepSchedule constant(double gamma) {
    StepSchedule s;
    s.mode = StepMode::constant;
    s.gamma0 = gamma;
    return s;
  }

  double at(Stamp k) const;

  // Throws invalid-argument when parameters fall outside their mode's range.
  void validate() const;

  // Whether the sequence has sum gamma = inf and sum gamma^2 < inf. Decided
  // from the mode and its parameters, not by numerical summation.
  bool diminishing_conditions_hold() const;
};

}  // namespace asgt
