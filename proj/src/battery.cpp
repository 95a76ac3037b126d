#include "curbnet/battery.hpp"

#include <cmath>

#include <fmt/format.h>

#include "curbnet/errors.hpp"

namespace curbnet {

double battery_drain(double power_w, double voltage_v, double hours, double capacity_ah, double eol_factor) {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || !(v > 0.0)) throw InputError(fmt::format("{} must be positive, got {}", name, v));
  };
  positive(power_w, "power");
  positive(voltage_v, "voltage");
  positive(capacity_ah, "capacity");
  positive(eol_factor, "end-of-life factor");
  if (!std::isfinite(hours) || hours < 0.0) throw InputError(fmt::format("hours must be >= 0, got {}", hours));
  const double amps = power_w / voltage_v;
  return amps * hours / (capacity_ah * eol_factor) * 100.0;
}

}  // namespace curbnet
