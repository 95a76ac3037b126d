#include "curbnet/artifacts.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "curbnet/hash.hpp"
#include "curbnet/scenario.hpp"

namespace curbnet {

namespace {

std::string opt_num(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

}  // namespace

std::string decisions_csv(const RunArtifacts& a) {
  std::string out = "time,id,reason,neighbors,d_new,d_boost,d_sat,cells_new,cells_boosted,cells_saturated,score,outcome\n";
  for (const auto& d : a.decisions) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", d.time, d.id, d.reason, d.neighbors, d.metrics.d_new,
                       d.metrics.d_boost, d.metrics.d_sat, d.metrics.cells_new, d.metrics.cells_boosted,
                       d.metrics.cells_saturated, d.score, to_string(d.outcome));
  }
  return out;
}

std::string elections_csv(const RunArtifacts& a) {
  std::string out = "time,displaced,candidates,d_score_max,winning_slot,winner,winner_delay,slots\n";
  for (const auto& e : a.elections) {
    std::string slots;
    for (std::size_t k = 0; k < e.candidates.size(); ++k) {
      if (k) slots += ';';
      slots += fmt::format("{}:{}", e.candidates[k].id, e.slots[k]);
    }
    out += fmt::format("{},{},{},{},{},{},{},{}\n", e.time, e.displaced, e.candidates.size(), e.d_score_max,
                       e.winning_slot, e.winner ? std::to_string(*e.winner) : std::string(), e.winner_delay, slots);
  }
  return out;
}

std::string map_build_csv(const RunArtifacts& a) {
  std::string out = "id,park_time,oracle_cells,observed_cells,completeness,time_to_80\n";
  for (const auto& m : a.map_build) {
    out += fmt::format("{},{},{},{},{},{}\n", m.id, m.park_time, m.oracle_cells, m.observed_cells, m.completeness,
                       opt_num(m.time_to_80));
  }
  return out;
}

std::string mode_counts_csv(const RunArtifacts& a) {
  std::string out = "time,listening,active,sleeping\n";
  for (const auto& c : a.mode_counts) out += fmt::format("{},{},{},{}\n", c.time, c.listening, c.active, c.sleeping);
  return out;
}

std::string final_nodes_csv(const RunArtifacts& a) {
  std::string out = "id,mode,x,y,park_time,covered_cells,last_score,decisions\n";
  for (const auto& n : a.final_nodes) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", n.id, to_string(n.mode), n.position.x, n.position.y, n.park_time,
                       n.scm.nonzero_count(), n.last_score, n.decisions);
  }
  return out;
}

std::string reachability_csv(const BroadcastResult& r, std::uint64_t seed) {
  std::string out = "seed,t,count\n";
  for (const auto& p : r.series) out += fmt::format("{},{},{}\n", seed, p.t, p.count);
  return out;
}

std::string run_summary_json(const RunArtifacts& a, const Scenario& s) {
  nlohmann::ordered_json j;
  j["end_time"] = a.end_time;
  j["parked_vehicles"] = a.stats.parks;
  j["departures"] = a.stats.departs;
  j["decisions"] = a.decisions.size();
  j["elections"] = a.elections.size();
  int active = 0, sleeping = 0, listening = 0;
  for (const auto& n : a.final_nodes) {
    if (n.mode == NodeMode::kActiveRsu) ++active;
    else if (n.mode == NodeMode::kListening) ++listening;
    else ++sleeping;
  }
  j["final"] = {{"active", active}, {"sleeping", sleeping}, {"listening", listening}};
  j["network"] = {{"mean_signal", a.final_metrics.mean_signal},
                  {"mean_saturation", a.final_metrics.mean_saturation},
                  {"rsu_count", a.final_metrics.rsu_count},
                  {"domain_cells", a.final_metrics.domain_cells}};
  nlohmann::ordered_json mb = nlohmann::ordered_json::array();
  double sum80 = 0.0;
  int n80 = 0;
  for (const auto& m : a.map_build) {
    if (m.time_to_80) {
      sum80 += *m.time_to_80;
      ++n80;
    }
  }
  j["map_build"] = {{"nodes", a.map_build.size()},
                    {"reached_80", n80},
                    {"mean_time_to_80", n80 ? nlohmann::ordered_json(sum80 / n80) : nlohmann::ordered_json(nullptr)}};
  j["stats"] = {{"events", a.stats.events},
                {"beacon_ticks", a.stats.beacon_ticks},
                {"beacons_delivered", a.stats.beacons_delivered},
                {"beacons_lost", a.stats.beacons_lost},
                {"observations_outside_window", a.stats.observations_outside}};
  if (a.reachability) {
    const auto& r = *a.reachability;
    j["broadcast"] = {{"population", r.population},
                      {"time_to_90", r.time_to_90 ? nlohmann::ordered_json(*r.time_to_90) : nlohmann::ordered_json(nullptr)},
                      {"time_to_full",
                       r.time_to_full ? nlohmann::ordered_json(*r.time_to_full) : nlohmann::ordered_json(nullptr)}};
  }
  j["scenario_hash"] = scenario_hash(s);
  return j.dump(2) + "\n";
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

void OutputDir::write(const std::string& name, const std::string& text) {
  write_text_file(dir_ / name, text);
  hashes_[name] = fnv1a_hex(text);
}

void OutputDir::write_manifest(const std::string& command, const std::map<std::string, std::string>& fields) {
  nlohmann::ordered_json j;
  j["tool"] = "curbnet";
  j["version"] = CURBNET_VERSION;
  j["command"] = command;
  for (const auto& [k, v] : fields) j[k] = v;
  j["outputs"] = hashes_;
  write_text_file(dir_ / "manifest.json", j.dump(2) + "\n");
}

void write_run_artifacts(const RunArtifacts& a, const Scenario& s, OutputDir& out) {
  out.write("decisions.csv", decisions_csv(a));
  out.write("elections.csv", elections_csv(a));
  out.write("map_build.csv", map_build_csv(a));
  out.write("mode_counts.csv", mode_counts_csv(a));
  out.write("final_nodes.csv", final_nodes_csv(a));
  if (a.reachability) out.write("reachability.csv", reachability_csv(*a.reachability, s.config.rng_seed));
  out.write("summary.json", run_summary_json(a, s));
}

}  // namespace curbnet
