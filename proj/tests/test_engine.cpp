#include <doctest.h>

#include <cmath>
#include <numbers>

#include "curbnet/artifacts.hpp"
#include "curbnet/engine.hpp"
#include "curbnet/errors.hpp"

using namespace curbnet;

namespace {

// One mover circling (cx, cy) at radius r, one sample per second.
void add_circle(Scenario& s, VehicleId id, GeoCoord c, double r, double period, int seconds) {
  for (int t = 0; t < seconds; ++t) {
    const double a = 2.0 * std::numbers::pi * t / period;
    s.trace.samples.push_back({static_cast<double>(t), id, {c.x + r * std::cos(a), c.y + r * std::sin(a)}, 10.0, 0.0});
  }
}

Scenario open_field(int seconds) {
  Scenario s;
  s.config.area_width = 800;
  s.config.area_height = 800;
  add_circle(s, 1, {400, 400}, 80.0, 50.0, seconds);
  return s;
}

std::vector<GeoCoord> points_of(const Scenario& s, VehicleId skip) {
  std::vector<GeoCoord> out;
  for (const auto& p : s.trace.samples) {
    if (p.id != skip) out.push_back(p.pos);
  }
  return out;
}

}  // namespace

TEST_CASE("an empty scenario produces empty artifacts") {
  Scenario s;
  s.config.area_width = 100;
  s.config.area_height = 100;
  const RunArtifacts a = run(s);
  CHECK(a.decisions.empty());
  CHECK(a.elections.empty());
  CHECK(a.final_nodes.empty());
  CHECK(a.mode_counts.empty());
}

TEST_CASE("a lone parked car learns exactly what the mover shows it") {
  Scenario s = open_field(200);
  s.config.listen_duration = 60;
  s.events.push_back({0.0, 9, ParkingKind::kPark, {400, 400}});
  const RunArtifacts a = run(s);
  REQUIRE(a.final_nodes.size() == 1);
  const FinalNode& n = a.final_nodes[0];
  CHECK(n.mode == NodeMode::kActiveRsu);
  const CoverageMap oracle = complete_map({400, 400}, points_of(s, 9), s.obstructions, s.config.quality,
                                          s.config.map_order, s.config.cell_size);
  CHECK(n.scm == oracle);
  CHECK(completeness(n.scm, oracle) == 1.0);

  REQUIRE(a.decisions.size() >= 1);
  CHECK(a.decisions[0].time == 60.0);
  CHECK(a.decisions[0].reason == "initial");
  CHECK(a.decisions[0].metrics.d_sat == 0);

  REQUIRE(a.map_build.size() == 1);
  REQUIRE(a.map_build[0].time_to_80.has_value());
  // One lap is enough to see every cell on the circle.
  CHECK(*a.map_build[0].time_to_80 <= 50.0);
}

TEST_CASE("a car that parks late only records what it hears afterwards") {
  Scenario s = open_field(200);
  s.config.listen_duration = 30;
  s.events.push_back({120.0, 9, ParkingKind::kPark, {400, 400}});
  const RunArtifacts a = run(s);
  std::vector<GeoCoord> late;
  for (const auto& p : s.trace.samples) {
    if (p.time >= 120.0) late.push_back(p.pos);
  }
  const CoverageMap expect =
      complete_map({400, 400}, late, s.obstructions, s.config.quality, s.config.map_order, s.config.cell_size);
  REQUIRE(a.final_nodes.size() == 1);
  CHECK(a.final_nodes[0].scm == expect);
}

TEST_CASE("redundant cars sleep and elect a replacement when the RSU leaves") {
  Scenario s = open_field(400);
  s.config.listen_duration = 30;
  s.config.wake_period = 5;
  s.events = {{0.0, 10, ParkingKind::kPark, {400, 400}},
              {1.0, 11, ParkingKind::kPark, {405, 400}},
              {2.0, 12, ParkingKind::kPark, {395, 400}},
              {150.0, 10, ParkingKind::kDepart, {}}};
  const RunArtifacts a = run(s);

  auto first_decision = [&](VehicleId id) {
    for (const auto& d : a.decisions) {
      if (d.id == id) return d;
    }
    FAIL("no decision");
    return DecisionRecord{};
  };
  CHECK(first_decision(10).outcome == NodeMode::kActiveRsu);
  CHECK(first_decision(11).outcome == NodeMode::kSleeping);
  CHECK(first_decision(12).outcome == NodeMode::kSleeping);
  CHECK(first_decision(11).neighbors == 1);

  REQUIRE(a.elections.size() == 1);
  const ElectionRecord& e = a.elections[0];
  CHECK(e.displaced == 10);
  CHECK(e.candidates.size() == 2);
  REQUIRE(e.winner.has_value());
  // Three missed windows after the departure.
  CHECK(e.time > 150.0);
  CHECK(e.time <= 150.0 + 3 * 5.0 + 1e-9);

  int active = 0, sleeping = 0;
  for (const auto& n : a.final_nodes) {
    active += n.mode == NodeMode::kActiveRsu;
    sleeping += n.mode == NodeMode::kSleeping;
  }
  CHECK(active == 1);
  CHECK(sleeping == 1);
  bool logged = false;
  for (const auto& d : a.decisions) logged = logged || (d.reason == "election" && d.id == *e.winner);
  CHECK(logged);
}

TEST_CASE("runs are deterministic") {
  SynthesisParams p;
  p.density = 40;
  p.duration = 700;
  p.parked_count = 6;
  p.park_window = 100;
  p.seed = 5;
  ScenarioConfig cfg;
  cfg.listen_duration = 200;
  const Scenario s = synthesize(p, cfg);
  const RunArtifacts a = run(s), b = run(s);
  CHECK(decisions_csv(a) == decisions_csv(b));
  CHECK(final_nodes_csv(a) == final_nodes_csv(b));
  CHECK(run_summary_json(a, s) == run_summary_json(b, s));
  CHECK(a.stats.beacon_ticks == 701);  // t = 0 .. 700 inclusive
}

TEST_CASE("beacon loss drops deliveries") {
  Scenario s = open_field(100);
  s.events.push_back({0.0, 9, ParkingKind::kPark, {400, 400}});
  s.config.beacon_loss = {1, 1, 1, 1, 1, 1};
  const RunArtifacts a = run(s);
  CHECK(a.stats.beacons_delivered == 0);
  CHECK(a.stats.beacons_lost > 0);
  CHECK(a.final_nodes[0].scm.empty());
}

TEST_CASE("completeness") {
  CoverageMap oracle(3, {45, 45}, 30.0);
  CoverageMap scm(3, {45, 45}, 30.0);
  CHECK(completeness(scm, oracle) == 1.0);
  record_observation(oracle, {0, 0}, SignalQuality::of(3));
  record_observation(oracle, {1, 1}, SignalQuality::of(3));
  CHECK(completeness(scm, oracle) == 0.0);
  record_observation(scm, {1, 1}, SignalQuality::of(2));
  CHECK(completeness(scm, oracle) == 0.5);
  CHECK_THROWS_AS(completeness(CoverageMap(5, {45, 45}, 30.0), oracle), InputError);
}

TEST_CASE("positions between samples are interpolated") {
  MobilityTrace tr;
  tr.samples = {{0.0, 1, {0, 0}, 0, 0}, {2.0, 1, {20, 10}, 0, 0}};
  const PositionIndex idx(tr);
  std::vector<std::pair<VehicleId, GeoCoord>> out;
  idx.at(1.0, out);
  REQUIRE(out.size() == 1);
  CHECK(out[0].second.x == doctest::Approx(10.0));
  CHECK(out[0].second.y == doctest::Approx(5.0));
  idx.at(2.5, out);
  CHECK(out.empty());
}
