#pragma once

namespace curbnet {

/// Share of a car battery's usable capacity (percent) drawn by a radio of
/// `power_w` watts on a `voltage_v` bus over `hours`. `eol_factor` scales the
/// capacity for an aged battery (1 when new). Zero hours gives 0%; any other
/// non-positive input throws InputError.
double battery_drain(double power_w, double voltage_v, double hours, double capacity_ah, double eol_factor);

}  // namespace curbnet
