#include "asgt/step_schedule.hpp"

#include <cmath>
#include <string>

#include "asgt/error.hpp"

namespace asgt {

std::string_view to_string(StepMode mode) {
  switch (mode) {
    case StepMode::power_decay: return "power-decay";
    case StepMode::stepwise: return "stepwise";
    case StepMode::constant: return "constant";
  }
  return "unknown";
}

StepMode parse_step_mode(std::string_view name) {
  if (name == "power-decay") return StepMode::power_decay;
  if (name == "stepwise") return StepMode::stepwise;
  if (name == "constant") return StepMode::constant;
  throw Error(ErrorKind::invalid_argument, "unknown step mode '" + std::string(name) + "'");
}

double StepSchedule::at(Stamp k) const {
  if (freeze_after && k >= *freeze_after) return 0.0;
  switch (mode) {
    case StepMode::power_decay:
      return gamma0 / std::pow(static_cast<double>(k + 1), alpha);
    case StepMode::stepwise:
      return gamma0 / std::pow(factor, static_cast<double>(k / static_cast<Stamp>(interval)));
    case StepMode::constant:
      return gamma0;
  }
  return 0.0;
}

void StepSchedule::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::invalid_argument, why); };
  switch (mode) {
    case StepMode::power_decay:
      if (!(gamma0 > 0.0 && gamma0 <= 1.0)) fail("power-decay needs gamma0 in (0, 1]");
      if (!(alpha > 0.5 && alpha <= 1.0)) fail("power-decay needs alpha in (1/2, 1]");
      break;
    case StepMode::stepwise:
      if (!(gamma0 > 0.0 && gamma0 <= 1.0)) fail("stepwise needs gamma0 in (0, 1]");
      if (interval == 0) fail("stepwise needs a positive interval");
      if (!(factor > 1.0)) fail("stepwise needs factor > 1");
      break;
    case StepMode::constant:
      if (!(gamma0 >= 0.0 && gamma0 <= 1.0)) fail("constant step must lie in [0, 1]");
      break;
  }
  if (freeze_after && *freeze_after < 0) fail("freeze_after must be non-negative");
}

bool StepSchedule::diminishing_conditions_hold() const {
  // A freeze truncates the sum of steps; geometric reductions make it
  // finite; a constant step makes the sum of squares diverge.
  return mode == StepMode::power_decay && !freeze_after && alpha > 0.5 && alpha <= 1.0;
}

}  // namespace asgt
