#include "curbnet/commands.hpp"

#include <cstdlib>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "curbnet/artifacts.hpp"
#include "curbnet/battery.hpp"
#include "curbnet/engine.hpp"
#include "curbnet/errors.hpp"
#include "curbnet/experiments.hpp"
#include "curbnet/hash.hpp"
#include "curbnet/scenario.hpp"

namespace curbnet {

using json = nlohmann::ordered_json;

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("CURBNET_OUT_DIR"); env && *env) return env;
  return "out";
}

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InvariantViolation& e) {
    fmt::print(err, "invariant violation: {}\n", e.what());
    return kExitInvariant;
  } catch (const LoadError& e) {
    fmt::print(err, "load error: {}\n", e.what());
    return kExitBadConfig;
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return kExitBadConfig;
  } catch (const InputError& e) {
    fmt::print(err, "input error: {}\n", e.what());
    return kExitBadConfig;
  } catch (const FormatError& e) {
    fmt::print(err, "format error: {}\n", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitFailure;
  }
}

bool has_synth_keys(const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (k.rfind("synth.", 0) == 0) return true;
  }
  return false;
}

// Flags layered over the file: --set first, then --seed and --preset.
KeyValues effective_keys(KeyValues kv, const CommonOptions& o) {
  apply_overrides(kv, o.overrides);
  if (o.seed) {
    kv.erase("seed");
    kv["rng_seed"] = std::to_string(*o.seed);
    if (has_synth_keys(kv)) kv["synth.seed"] = std::to_string(*o.seed);
  }
  if (o.preset) kv["weights.preset"] = *o.preset;
  return kv;
}

struct Loaded {
  Scenario scenario;
  ScenarioSource source;
  KeyValues keys;
};

Loaded load(const CommonOptions& o) {
  if (!o.config) throw ConfigError("--config is required for this command");
  KeyValues kv = effective_keys(read_key_values(*o.config), o);
  auto [cfg, src] = parse_config(kv, o.config->parent_path());
  return {build_scenario(cfg, src), src, kv};
}

// Protocol settings for commands that generate their own cities: --set,
// --seed and --preset still apply, but no data source is needed.
ScenarioConfig settings_only(const CommonOptions& o) {
  KeyValues kv = o.config ? read_key_values(*o.config) : KeyValues{};
  kv = effective_keys(std::move(kv), o);
  for (auto it = kv.begin(); it != kv.end();) {
    const bool source = it->first == "trace" || it->first == "events" || it->first == "obstructions" ||
                        it->first.rfind("synth.", 0) == 0;
    it = source ? kv.erase(it) : std::next(it);
  }
  kv["synth.density"] = "1";  // placeholder source so the parser accepts the document
  return parse_config(kv, ".").first;
}

json metrics_json(const NetworkMetrics& m) {
  return {{"mean_signal", m.mean_signal},
          {"mean_saturation", m.mean_saturation},
          {"rsu_count", m.rsu_count},
          {"domain_cells", m.domain_cells}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < count; ++k) seeds.push_back(first + static_cast<std::uint64_t>(k));
  return seeds;
}

}  // namespace

int cmd_run(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(o);
    const RunArtifacts a = run(l.scenario);
    OutputDir dir(o.out_dir);
    write_run_artifacts(a, l.scenario, dir);
    dir.write_manifest("run", {{"config_hash", scenario_hash(l.scenario)},
                               {"settings_hash", fnv1a_hex(format_key_values(l.keys))},
                               {"seed", std::to_string(l.scenario.config.rng_seed)}});
    int active = 0;
    for (const auto& n : a.final_nodes) active += n.mode == NodeMode::kActiveRsu ? 1 : 0;
    fmt::print(out, "run: {} parked, {} active RSUs, {} decisions, {} elections, mean signal {:.3f} -> {}\n",
               a.final_nodes.size(), active, a.decisions.size(), a.elections.size(), a.final_metrics.mean_signal,
               dir.path().string());
    return kExitOk;
  });
}

int cmd_validate(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(o);
    std::map<VehicleId, int> vehicles;
    for (const auto& smp : l.scenario.trace.samples) ++vehicles[smp.id];
    fmt::print(out, "valid: {} trace samples from {} vehicles, {} parking events, {} obstructions, hash {}\n",
               l.scenario.trace.samples.size(), vehicles.size(), l.scenario.events.size(),
               l.scenario.obstructions.polygons().size(), scenario_hash(l.scenario));
    return kExitOk;
  });
}

int cmd_sweep(const CommonOptions& o, const SweepOptions& sw, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (sw.seeds < 1) throw ConfigError("--seeds must be >= 1");
    const Loaded l = load(o);
    std::vector<DecisionWeights> grid;
    for (double k : sw.kappa) {
      for (double la : sw.lambda) {
        for (double m : sw.mu) grid.push_back({k, la, m});
      }
    }
    if (sw.presets) {
      grid.push_back(DecisionWeights::set1());
      grid.push_back(DecisionWeights::set2());
    }
    if (grid.empty()) throw ConfigError("sweep grid is empty");
    const auto seeds = seed_range(l.scenario.config.rng_seed, sw.seeds);
    const auto rows = sweep(l.scenario, grid, seeds, o.parallel, l.source.synth);

    std::string csv = "kappa,lambda,mu,mean_signal,mean_saturation,rsu_count,runs\n";
    for (const auto& r : rows) {
      csv += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{}\n", r.weights.kappa, r.weights.lambda, r.weights.mu,
                         r.mean_signal, r.mean_saturation, r.rsu_count, r.runs);
    }
    OutputDir dir(o.out_dir);
    dir.write("sweep.csv", csv);
    dir.write_manifest("sweep", {{"config_hash", scenario_hash(l.scenario)},
                                 {"settings_hash", fnv1a_hex(format_key_values(l.keys))},
                                 {"seed", std::to_string(l.scenario.config.rng_seed)},
                                 {"seeds", std::to_string(sw.seeds)}});
    out << csv;
    return kExitOk;
  });
}

int cmd_compare(const CommonOptions& o, const CompareOptions& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Objective obj;
    if (c.objective == "lexicographic") obj = Objective::lexicographic(c.epsilon);
    else if (c.objective == "scalarized") obj = Objective::scalarized(c.alpha);
    else throw ConfigError(fmt::format("unknown objective '{}'", c.objective));

    json j;
    j["objective"] = {{"kind", c.objective}, {"epsilon", obj.epsilon}, {"alpha", obj.alpha}};
    std::map<std::string, std::string> manifest;

    if (c.clustered) {
      const std::uint64_t seed = o.seed.value_or(7);
      const auto maps = clustered_fixture(seed);
      const OptimalResult opt = brute_force_optimal(maps, obj, std::max(c.cap, static_cast<int>(maps.size())),
                                                    o.parallel);
      const NetworkMetrics all = evaluate_subset(CandidatePool(maps), (std::uint64_t{1} << maps.size()) - 1);
      j["fixture"] = "clustered";
      j["seed"] = seed;
      j["candidates"] = maps.size();
      j["optimal"] = metrics_json(opt.metrics);
      j["optimal"]["mask"] = opt.mask;
      j["all_active"] = metrics_json(all);
      j["saturation_ratio"] = opt.metrics.mean_saturation > 0 ? all.mean_saturation / opt.metrics.mean_saturation : 0.0;
      j["signal_gap"] = all.mean_signal > 0 ? 1.0 - opt.metrics.mean_signal / all.mean_signal : 0.0;
      manifest["seed"] = std::to_string(seed);
      fmt::print(out, "clustered fixture: optimal {} RSUs, signal {:.3f}, saturation {:.3f}; all {} RSUs, signal {:.3f}, "
                      "saturation {:.3f}\n",
                 opt.metrics.rsu_count, opt.metrics.mean_signal, opt.metrics.mean_saturation, all.rsu_count,
                 all.mean_signal, all.mean_saturation);
    } else {
      CompareReport r;
      if (o.config) {
        const Loaded l = load(o);
        r.instances.push_back(compare_greedy_vs_optimal(l.scenario, obj, c.cap));
        summarize(r);
        manifest["config_hash"] = scenario_hash(l.scenario);
        manifest["seed"] = std::to_string(l.scenario.config.rng_seed);
      } else {
        if (c.instances < 1) throw ConfigError("--instances must be >= 1");
        const std::uint64_t first = o.seed.value_or(1);
        r = compare_many(seed_range(first, c.instances), obj, o.parallel, c.min_cars, c.max_cars, settings_only(o));
        manifest["seed"] = std::to_string(first);
        manifest["instances"] = std::to_string(c.instances);
      }
      json inst = json::array();
      for (const auto& i : r.instances) {
        json e;
        e["seed"] = i.seed;
        e["candidates"] = i.candidates;
        e["greedy"] = metrics_json(i.greedy);
        e["greedy"]["mask"] = i.greedy_mask;
        e["optimal"] = metrics_json(i.optimal);
        e["optimal"]["mask"] = i.optimal_mask;
        e["all_active"] = metrics_json(i.all_active);
        e["coverage_ratio"] = i.coverage_ratio;
        e["count_ratio"] = i.count_ratio;
        inst.push_back(e);
      }
      j["instances"] = inst;
      j["aggregate"] = {{"instances", r.instances.size()},
                        {"mean_coverage_ratio", r.mean_coverage_ratio},
                        {"mean_greedy_count", r.mean_greedy_count},
                        {"mean_optimal_count", r.mean_optimal_count},
                        {"count_ratio", r.count_ratio}};
      fmt::print(out, "compare: {} instances, coverage ratio {:.4f}, greedy {:.2f} vs optimal {:.2f} RSUs (x{:.3f})\n",
                 r.instances.size(), r.mean_coverage_ratio, r.mean_greedy_count, r.mean_optimal_count, r.count_ratio);
    }
    OutputDir dir(o.out_dir);
    dir.write("compare.json", j.dump(2) + "\n");
    dir.write_manifest("compare", manifest);
    return kExitOk;
  });
}

int cmd_broadcast(const CommonOptions& o, const BroadcastCliOptions& b, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    BroadcastOptions opt;
    opt.rsu_backhaul = b.backhaul;
    opt.horizon = b.duration;
    OutputDir dir(o.out_dir);
    json summary;
    summary["backhaul"] = b.backhaul;
    std::map<std::string, std::string> manifest;

    if (o.config) {
      const Loaded l = load(o);
      const auto& s = l.scenario;
      BroadcastMessage msg{1, {s.config.area_width / 2.0, s.config.area_height / 2.0}, 0.0};
      if (s.config.broadcast_time) {
        msg.origin = s.config.broadcast_origin;
        msg.created = *s.config.broadcast_time;
      }
      std::vector<VehicleId> rsus;
      for (const auto& n : parked_at(s, msg.created)) rsus.push_back(n.id);
      const auto control = run_broadcast(s, {}, msg, opt);
      const auto assisted = run_broadcast(s, rsus, msg, opt);
      std::string csv = "variant,seed,t,count\n";
      for (const auto& [name, r] : {std::pair{"control", &control}, std::pair{"rsu", &assisted}}) {
        for (const auto& p : r->series) csv += fmt::format("{},{},{},{}\n", name, s.config.rng_seed, p.t, p.count);
      }
      dir.write("reachability.csv", csv);
      summary["population"] = control.population;
      summary["rsus"] = rsus.size();
      summary["control"] = {{"time_to_90", opt_json(control.time_to_90)}, {"time_to_full", opt_json(control.time_to_full)}};
      summary["rsu"] = {{"time_to_90", opt_json(assisted.time_to_90)}, {"time_to_full", opt_json(assisted.time_to_full)}};
      if (control.time_to_full && assisted.time_to_full) {
        summary["delta_full"] = *control.time_to_full - *assisted.time_to_full;
      }
      manifest["config_hash"] = scenario_hash(s);
      manifest["seed"] = std::to_string(s.config.rng_seed);
      fmt::print(out, "broadcast: {} vehicles, {} RSUs, full reach {} s without RSUs, {} s with\n", control.population,
                 rsus.size(), control.time_to_full ? fmt::format("{}", *control.time_to_full) : "never",
                 assisted.time_to_full ? fmt::format("{}", *assisted.time_to_full) : "never");
    } else {
      if (b.seeds < 1) throw ConfigError("--seeds must be >= 1");
      BroadcastExperiment e;
      e.densities = b.densities;
      e.seeds = seed_range(o.seed.value_or(1), b.seeds);
      e.duration = b.duration;
      e.parked_ratio = b.parked_ratio;
      e.options = opt;
      const auto runs = broadcast_experiment(e, o.parallel, settings_only(o));
      std::string runs_csv =
          "density,seed,population,rsus,control_full,rsu_full,control_censored,rsu_censored,control_90,rsu_90\n";
      std::string series = "density,variant,seed,t,count\n";
      for (const auto& r : runs) {
        runs_csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.density, r.seed, r.population, r.rsus,
                                r.control_full, r.rsu_full, r.control_censored ? 1 : 0, r.rsu_censored ? 1 : 0,
                                r.control_90 ? fmt::format("{}", *r.control_90) : "",
                                r.rsu_90 ? fmt::format("{}", *r.rsu_90) : "");
        for (const auto& p : r.control.series) series += fmt::format("{},control,{},{},{}\n", r.density, r.seed, p.t, p.count);
        for (const auto& p : r.assisted.series) series += fmt::format("{},rsu,{},{},{}\n", r.density, r.seed, p.t, p.count);
      }
      dir.write("runs.csv", runs_csv);
      dir.write("reachability.csv", series);
      json dens = json::array();
      for (const auto& s : summarize_broadcast(runs)) {
        dens.push_back({{"density", s.density},
                        {"runs", s.runs},
                        {"mean_time_to_full_control", s.mean_control_full},
                        {"mean_time_to_full_rsu", s.mean_rsu_full},
                        {"improvement", s.improvement},
                        {"censored_runs", s.censored}});
        fmt::print(out, "density {:>5}: full reach {:.1f} s -> {:.1f} s with RSUs ({:.1f}% faster, {} censored)\n",
                   s.density, s.mean_control_full, s.mean_rsu_full, 100.0 * s.improvement, s.censored);
      }
      summary["densities"] = dens;
      manifest["seed"] = std::to_string(e.seeds.front());
      manifest["seeds"] = std::to_string(b.seeds);
    }
    dir.write("summary.json", summary.dump(2) + "\n");
    dir.write_manifest("broadcast", manifest);
    return kExitOk;
  });
}

int cmd_battery(const BatteryOptions& b, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const double pct = battery_drain(b.power, b.voltage, b.hours, b.capacity, b.eol);
    fmt::print(out, "{:.4f}%\n", pct);
    return kExitOk;
  });
}

}  // namespace curbnet
