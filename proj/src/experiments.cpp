#include "curbnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "curbnet/errors.hpp"
#include "curbnet/random.hpp"

namespace curbnet {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

CompareInstance compare_greedy_vs_optimal(const Scenario& s, const Objective& objective, int cap) {
  const RunArtifacts a = run(s);
  std::vector<CoverageMap> maps;
  std::vector<bool> greedy;
  for (const auto& n : a.final_nodes) {
    if (n.mode == NodeMode::kListening) continue;
    maps.push_back(n.scm);
    greedy.push_back(n.mode == NodeMode::kActiveRsu);
  }
  CompareInstance ci;
  ci.seed = s.config.rng_seed;
  ci.candidates = static_cast<int>(maps.size());
  const CandidatePool pool(maps);
  ci.greedy_mask = mask_of(greedy);
  ci.greedy = evaluate_subset(pool, ci.greedy_mask);
  const std::uint64_t all = maps.empty() ? 0 : (std::uint64_t{1} << maps.size()) - 1;
  ci.all_active = evaluate_subset(pool, all);
  const OptimalResult opt = brute_force_optimal(maps, objective, cap);
  ci.optimal_mask = opt.mask;
  ci.optimal = opt.metrics;
  ci.coverage_ratio = ci.optimal.mean_signal > 0.0 ? ci.greedy.mean_signal / ci.optimal.mean_signal : 1.0;
  if (ci.optimal.rsu_count > 0) {
    ci.count_ratio = static_cast<double>(ci.greedy.rsu_count) / ci.optimal.rsu_count;
  } else {
    ci.count_ratio = ci.greedy.rsu_count == 0 ? 1.0 : static_cast<double>(ci.greedy.rsu_count);
  }
  return ci;
}

Scenario compare_instance(std::uint64_t seed, int min_cars, int max_cars, ScenarioConfig base) {
  if (min_cars < 1 || max_cars < min_cars) throw InputError("car range must satisfy 1 <= min <= max");
  Rng pick(derive_seed(seed, 3));
  SynthesisParams p;
  p.area_km2 = 0.18;
  p.density = 120.0;
  p.parked_count = min_cars + static_cast<int>(pick.below(static_cast<std::uint64_t>(max_cars - min_cars + 1)));
  p.park_window = 300.0;
  p.seed = seed;
  p.duration = p.park_window + base.listen_duration + 60.0;
  base.rng_seed = seed;
  base.duration = 0.0;
  return synthesize(p, base);
}

void summarize(CompareReport& r) {
  r.mean_coverage_ratio = r.mean_greedy_count = r.mean_optimal_count = 0.0;
  r.count_ratio = 0.0;
  if (r.instances.empty()) return;
  for (const auto& i : r.instances) {
    r.mean_coverage_ratio += i.coverage_ratio;
    r.mean_greedy_count += i.greedy.rsu_count;
    r.mean_optimal_count += i.optimal.rsu_count;
  }
  const double n = static_cast<double>(r.instances.size());
  r.mean_coverage_ratio /= n;
  r.mean_greedy_count /= n;
  r.mean_optimal_count /= n;
  r.count_ratio = r.mean_optimal_count > 0.0 ? r.mean_greedy_count / r.mean_optimal_count : 1.0;
}

CompareReport compare_many(const std::vector<std::uint64_t>& seeds, const Objective& objective, int threads,
                           int min_cars, int max_cars, const ScenarioConfig& base) {
  CompareReport r;
  r.instances.resize(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t k) {
    const Scenario s = compare_instance(seeds[k], min_cars, max_cars, base);
    r.instances[k] = compare_greedy_vs_optimal(s, objective);
    r.instances[k].seed = seeds[k];
  });
  summarize(r);
  return r;
}

namespace {

std::vector<GeoCoord> road_points(const RoadGrid& g, double step) {
  std::vector<GeoCoord> out;
  const double xmax = (g.columns() - 1) * g.block;
  const double ymax = (g.rows() - 1) * g.block;
  for (int r = 0; r < g.rows(); ++r) {
    for (double x = 0.0; x <= xmax + 1e-9; x += step) out.push_back({x, r * g.block});
  }
  for (int c = 0; c < g.columns(); ++c) {
    for (double y = 0.0; y <= ymax + 1e-9; y += step) out.push_back({c * g.block, y});
  }
  return out;
}

}  // namespace

std::vector<CoverageMap> clustered_fixture(std::uint64_t seed, int cars, int clusters) {
  if (cars < 1 || clusters < 1) throw InputError("fixture needs at least one car and one cluster");
  SynthesisParams p;
  p.area_km2 = 0.18;
  p.density = 1.0;
  p.parked_count = 0;
  p.duration = 1.0;
  p.seed = seed;
  const Scenario city = synthesize(p);
  const RoadGrid& g = *city.roads;
  const ScenarioConfig& cfg = city.config;
  const auto points = road_points(g, 5.0);

  // Clusters around distinct interior intersections; cars sit on the road
  // stretches within 60 m of their cluster center.
  Rng rng(derive_seed(seed, 4));
  std::vector<GeoCoord> centers;
  while (centers.size() < static_cast<std::size_t>(clusters)) {
    const GeoCoord c = g.intersection(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(g.rows() - 2))),
                                      1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(g.columns() - 2))));
    if (std::find(centers.begin(), centers.end(), c) == centers.end()) centers.push_back(c);
  }
  std::vector<CoverageMap> maps;
  for (int k = 0; k < cars; ++k) {
    const GeoCoord c = centers[static_cast<std::size_t>(k) % centers.size()];
    const double off = rng.uniform(-60.0, 60.0);
    const GeoCoord pos = rng.bernoulli(0.5) ? GeoCoord{c.x + off, c.y} : GeoCoord{c.x, c.y + off};
    maps.push_back(complete_map(pos, points, city.obstructions, cfg.quality, cfg.map_order, cfg.cell_size));
  }
  return maps;
}

// ---------------------------------------------------------------------------

std::vector<SweepRow> sweep(const Scenario& base, const std::vector<DecisionWeights>& grid,
                            const std::vector<std::uint64_t>& seeds, int threads,
                            const std::optional<SynthesisParams>& synth) {
  if (grid.empty()) throw InputError("sweep grid is empty");
  if (seeds.empty()) throw InputError("sweep needs at least one seed");
  for (const auto& w : grid) w.validate();

  // Cities depend on the seed only, so build each once.
  std::vector<Scenario> cities;
  if (synth) {
    cities.resize(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t k) {
      SynthesisParams p = *synth;
      p.seed = seeds[k];
      ScenarioConfig cfg = base.config;
      cfg.rng_seed = seeds[k];
      cfg.duration = 0.0;
      cities[k] = synthesize(p, cfg);
    });
  }

  std::vector<NetworkMetrics> cell(grid.size() * seeds.size());
  parallel_for(cell.size(), threads, [&](std::size_t idx) {
    const std::size_t g = idx / seeds.size(), k = idx % seeds.size();
    Scenario s = synth ? cities[k] : base;
    s.config.weights = grid[g];
    s.config.rng_seed = seeds[k];
    cell[idx] = run(s).final_metrics;
  });

  std::vector<SweepRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepRow r;
    r.weights = grid[g];
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const auto& m = cell[g * seeds.size() + k];
      r.mean_signal += m.mean_signal;
      r.mean_saturation += m.mean_saturation;
      r.rsu_count += m.rsu_count;
      ++r.runs;
    }
    r.mean_signal /= r.runs;
    r.mean_saturation /= r.runs;
    r.rsu_count /= r.runs;
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------

BroadcastRun broadcast_pair(double density, std::uint64_t seed, const BroadcastExperiment& e,
                            const ScenarioConfig& base) {
  SynthesisParams p;
  p.density = density;
  p.area_km2 = e.area_km2;
  p.duration = e.duration;
  p.parked_ratio = e.parked_ratio;
  p.seed = seed;
  ScenarioConfig cfg = base;
  cfg.rng_seed = seed;
  cfg.duration = 0.0;
  const Scenario s = synthesize(p, cfg);

  // The incident happens at a random spot in the area.
  Rng where(derive_seed(seed, 5));
  const double ox = where.uniform(0.0, s.config.area_width);
  const double oy = where.uniform(0.0, s.config.area_height);
  BroadcastMessage msg{seed, GeoCoord{ox, oy}, 0.0};
  std::vector<VehicleId> rsus;
  for (const auto& n : parked_at(s, msg.created)) rsus.push_back(n.id);

  BroadcastOptions opt = e.options;
  opt.horizon = e.duration;
  BroadcastRun r;
  r.density = density;
  r.seed = seed;
  r.rsus = static_cast<int>(rsus.size());
  r.control = run_broadcast(s, {}, msg, opt);
  r.assisted = run_broadcast(s, rsus, msg, opt);
  r.population = r.control.population;
  r.control_censored = !r.control.time_to_full;
  r.rsu_censored = !r.assisted.time_to_full;
  r.control_full = r.control.time_to_full.value_or(e.duration);
  r.rsu_full = r.assisted.time_to_full.value_or(e.duration);
  r.control_90 = r.control.time_to_90;
  r.rsu_90 = r.assisted.time_to_90;
  return r;
}

std::vector<BroadcastRun> broadcast_experiment(const BroadcastExperiment& e, int threads,
                                               const ScenarioConfig& base) {
  std::vector<BroadcastRun> runs(e.densities.size() * e.seeds.size());
  parallel_for(runs.size(), threads, [&](std::size_t idx) {
    const std::size_t d = idx / e.seeds.size(), k = idx % e.seeds.size();
    runs[idx] = broadcast_pair(e.densities[d], e.seeds[k], e, base);
  });
  return runs;
}

std::vector<BroadcastSummary> summarize_broadcast(const std::vector<BroadcastRun>& runs) {
  std::vector<BroadcastSummary> out;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const BroadcastSummary& s) { return s.density == r.density; });
    if (it == out.end()) {
      out.push_back({r.density, 0, 0.0, 0.0, 0.0, 0});
      it = out.end() - 1;
    }
    ++it->runs;
    it->mean_control_full += r.control_full;
    it->mean_rsu_full += r.rsu_full;
    it->censored += (r.control_censored ? 1 : 0) + (r.rsu_censored ? 1 : 0);
  }
  for (auto& s : out) {
    s.mean_control_full /= s.runs;
    s.mean_rsu_full /= s.runs;
    s.improvement = s.mean_control_full > 0.0 ? 1.0 - s.mean_rsu_full / s.mean_control_full : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<MapBuildRun> map_build_experiment(const MapBuildExperiment& e, int threads, const ScenarioConfig& base) {
  std::vector<MapBuildRun> runs(e.densities.size() * e.seeds.size());
  parallel_for(runs.size(), threads, [&](std::size_t idx) {
    const std::size_t d = idx / e.seeds.size(), k = idx % e.seeds.size();
    SynthesisParams p;
    p.density = e.densities[d];
    p.area_km2 = e.area_km2;
    p.duration = e.duration;
    p.parked_count = e.parked;
    p.seed = e.seeds[k];
    ScenarioConfig cfg = base;
    cfg.rng_seed = e.seeds[k];
    cfg.duration = 0.0;
    // Keep every car listening for the whole run.
    cfg.listen_duration = e.duration + 1.0;
    const RunArtifacts a = run(synthesize(p, cfg));
    MapBuildRun r;
    r.density = p.density;
    r.seed = p.seed;
    double sum = 0.0;
    for (const auto& m : a.map_build) {
      ++r.nodes;
      if (m.time_to_80) {
        sum += *m.time_to_80;
      } else {
        sum += e.duration;
        ++r.censored;
      }
    }
    r.mean_time_to_80 = r.nodes ? sum / r.nodes : 0.0;
    runs[idx] = r;
  });
  return runs;
}

}  // namespace curbnet
