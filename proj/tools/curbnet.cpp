// Command-line front end. Argument parsing only; the work lives in the
// library's cmd_* functions.

#include <iostream>

#include <CLI11.hpp>

#include "curbnet/commands.hpp"

namespace {

void add_common(CLI::App* app, curbnet::CommonOptions& o, bool config_required) {
  auto* cfg = app->add_option("--config", o.config, "scenario config file");
  if (config_required) cfg->required();
  app->add_option("--seed", o.seed, "override the RNG seed");
  app->add_option("--set", o.overrides, "dotted key=value override (repeatable)");
  app->add_option("--out-dir", o.out_dir, "artifact directory (default: $CURBNET_OUT_DIR or ./out)");
  app->add_option("--parallel", o.parallel, "worker threads for independent runs")->check(CLI::PositiveNumber);
  app->add_option("--preset", o.preset, "decision weight preset")->check(CLI::IsMember({"set1", "set2"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parked cars as a self-organizing roadside-unit network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CURBNET_VERSION);

  curbnet::CommonOptions common;
  common.out_dir = curbnet::default_out_dir();
  curbnet::SweepOptions sweep;
  curbnet::CompareOptions compare;
  curbnet::BroadcastCliOptions broadcast;
  curbnet::BatteryOptions battery;

  auto* run = app.add_subcommand("run", "run one scenario and write its artifacts");
  add_common(run, common, true);

  auto* validate = app.add_subcommand("validate", "load and check a scenario");
  add_common(validate, common, true);

  auto* sw = app.add_subcommand("sweep", "decision-weight sweep");
  add_common(sw, common, true);
  sw->add_option("--kappa", sweep.kappa, "kappa values")->delimiter(',');
  sw->add_option("--lambda", sweep.lambda, "lambda values")->delimiter(',');
  sw->add_option("--mu", sweep.mu, "mu values")->delimiter(',');
  sw->add_flag("--presets", sweep.presets, "append the Set1 and Set2 presets to the grid");
  sw->add_option("--seeds", sweep.seeds, "seeds per grid point, counting up from the config seed");

  auto* cmp = app.add_subcommand("compare", "greedy decisions against the exhaustive optimum");
  add_common(cmp, common, false);
  cmp->add_option("--instances", compare.instances, "random instances when no config is given");
  cmp->add_option("--min-cars", compare.min_cars, "fewest parked cars per instance");
  cmp->add_option("--max-cars", compare.max_cars, "most parked cars per instance");
  cmp->add_option("--objective", compare.objective, "lexicographic | scalarized")
      ->check(CLI::IsMember({"lexicographic", "scalarized"}));
  cmp->add_option("--epsilon", compare.epsilon, "signal tolerance of the lexicographic objective");
  cmp->add_option("--alpha", compare.alpha, "per-RSU cost of the scalarized objective");
  cmp->add_option("--cap", compare.cap, "largest candidate count searched exhaustively");
  cmp->add_flag("--clustered", compare.clustered, "use the 24-car clustered fixture");

  auto* bc = app.add_subcommand("broadcast", "emergency-message reachability with and without RSUs");
  add_common(bc, common, false);
  bc->add_option("--densities", broadcast.densities, "moving vehicles per km^2")->delimiter(',');
  bc->add_option("--seeds", broadcast.seeds, "seeds per density");
  bc->add_option("--duration", broadcast.duration, "seconds simulated per run");
  bc->add_option("--parked-ratio", broadcast.parked_ratio, "parked RSUs per moving car");
  bool no_backhaul = false;
  bc->add_flag("--no-backhaul", no_backhaul, "RSUs do not relay to each other");

  auto* bat = app.add_subcommand("battery", "battery drain of an always-on parked RSU");
  bat->add_option("--power", battery.power, "radio power draw, W");
  bat->add_option("--voltage", battery.voltage, "bus voltage, V");
  bat->add_option("--hours", battery.hours, "hours active");
  bat->add_option("--capacity", battery.capacity, "battery capacity, Ah");
  bat->add_option("--eol", battery.eol, "end-of-life capacity factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : curbnet::kExitBadConfig;
  }
  broadcast.backhaul = !no_backhaul;

  if (run->parsed()) return curbnet::cmd_run(common, std::cout, std::cerr);
  if (validate->parsed()) return curbnet::cmd_validate(common, std::cout, std::cerr);
  if (sw->parsed()) return curbnet::cmd_sweep(common, sweep, std::cout, std::cerr);
  if (cmp->parsed()) return curbnet::cmd_compare(common, compare, std::cout, std::cerr);
  if (bc->parsed()) return curbnet::cmd_broadcast(common, broadcast, std::cout, std::cerr);
  if (bat->parsed()) return curbnet::cmd_battery(battery, std::cout, std::cerr);
  return curbnet::kExitFailure;
}
