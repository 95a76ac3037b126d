#pragma once

// Experiment drivers behind the CLI: greedy vs. exhaustive selection, the
// clustered 24-car fixture, weight sweeps, broadcast reachability and map
// build time. Independent runs may fan out over threads; results are always
// gathered in input order.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "curbnet/broadcast.hpp"
#include "curbnet/engine.hpp"
#include "curbnet/oracle.hpp"
#include "curbnet/scenario.hpp"

namespace curbnet {

/// Runs `job(k)` for k in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job);

// -- greedy vs. optimal ------------------------------------------------------

struct CompareInstance {
  std::uint64_t seed = 0;
  int candidates = 0;
  std::uint64_t greedy_mask = 0;
  std::uint64_t optimal_mask = 0;
  NetworkMetrics greedy;
  NetworkMetrics optimal;
  NetworkMetrics all_active;
  double coverage_ratio = 1.0;  // greedy / optimal mean signal
  double count_ratio = 1.0;     // greedy / optimal RSU count
};

struct CompareReport {
  std::vector<CompareInstance> instances;
  double mean_coverage_ratio = 0.0;
  double mean_greedy_count = 0.0;
  double mean_optimal_count = 0.0;
  double count_ratio = 0.0;  // ratio of the means
};

/// Runs the engine, takes every car that finished listening as a candidate
/// and the ones left active as the greedy choice, then searches exhaustively.
CompareInstance compare_greedy_vs_optimal(const Scenario& s, const Objective& objective = {},
                                          int cap = kDefaultCandidateCap);

/// A small random city (about 0.18 km^2) whose parked cars arrive over a few
/// minutes; 12 to 16 of them by default.
Scenario compare_instance(std::uint64_t seed, int min_cars = 12, int max_cars = 16, ScenarioConfig base = {});

CompareReport compare_many(const std::vector<std::uint64_t>& seeds, const Objective& objective, int threads,
                           int min_cars = 12, int max_cars = 16, const ScenarioConfig& base = {});
void summarize(CompareReport& r);

/// Candidate maps of the clustered 24-car fixture: cars parked around one
/// (or more) intersections, maps fully built from the road geometry.
std::vector<CoverageMap> clustered_fixture(std::uint64_t seed = 7, int cars = 24, int clusters = 1);

// -- weight sweep ----------------------------------------------------------

struct SweepRow {
  DecisionWeights weights;
  double mean_signal = 0.0;
  double mean_saturation = 0.0;
  double rsu_count = 0.0;
  int runs = 0;
};

/// One engine run per (weights, seed); rows average over seeds, in grid order.
std::vector<SweepRow> sweep(const Scenario& base, const std::vector<DecisionWeights>& grid,
                            const std::vector<std::uint64_t>& seeds, int threads,
                            const std::optional<SynthesisParams>& synth = std::nullopt);

// -- broadcast -------------------------------------------------------------

struct BroadcastRun {
  double density = 0.0;
  std::uint64_t seed = 0;
  int population = 0;
  int rsus = 0;
  double control_full = 0.0;  // horizon when not reached
  double rsu_full = 0.0;
  bool control_censored = false;
  bool rsu_censored = false;
  std::optional<double> control_90;
  std::optional<double> rsu_90;
  BroadcastResult control;
  BroadcastResult assisted;
};

struct BroadcastSummary {
  double density = 0.0;
  int runs = 0;
  double mean_control_full = 0.0;
  double mean_rsu_full = 0.0;
  double improvement = 0.0;  // 1 - rsu / control
  int censored = 0;
};

struct BroadcastExperiment {
  std::vector<double> densities{20.0, 40.0, 80.0};
  std::vector<std::uint64_t> seeds;
  double area_km2 = 1.0;
  double duration = 1800.0;
  double parked_ratio = 0.1;
  BroadcastOptions options;
};

/// Same trace with and without RSUs; every parked car is an RSU. The message
/// starts at a seeded random spot at t = 0.
BroadcastRun broadcast_pair(double density, std::uint64_t seed, const BroadcastExperiment& e,
                            const ScenarioConfig& base = {});
std::vector<BroadcastRun> broadcast_experiment(const BroadcastExperiment& e, int threads,
                                               const ScenarioConfig& base = {});
std::vector<BroadcastSummary> summarize_broadcast(const std::vector<BroadcastRun>& runs);

// -- map build time --------------------------------------------------------

struct MapBuildRun {
  double density = 0.0;
  std::uint64_t seed = 0;
  double mean_time_to_80 = 0.0;  // censored at the run length
  int nodes = 0;
  int censored = 0;
};

struct MapBuildExperiment {
  std::vector<double> densities{20.0, 40.0, 80.0};
  std::vector<std::uint64_t> seeds;
  double area_km2 = 1.0;
  double duration = 1500.0;
  int parked = 10;
};

std::vector<MapBuildRun> map_build_experiment(const MapBuildExperiment& e, int threads,
                                              const ScenarioConfig& base = {});

}  // namespace curbnet
