#pragma once

// Seeded discrete-event loop.
//
// Moving vehicles beacon once per tick; parked cars that are listening or
// acting as RSUs record every beacon they can classify. Listening ends with a
// decision, sleeping cars wake on the shared schedule, and a run of missed RSU
// beacons starts a replacement election.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curbnet/broadcast.hpp"
#include "curbnet/election.hpp"
#include "curbnet/geo_grid.hpp"
#include "curbnet/oracle.hpp"
#include "curbnet/propagation.hpp"
#include "curbnet/scenario.hpp"
#include "curbnet/selforg.hpp"

namespace curbnet {

/// Event kinds in processing priority at equal times.
enum class EventKind : std::uint8_t {
  kDepart,
  kPark,
  kBeaconTick,
  kDecisionDue,
  kWakeWindow,
  kBackoffExpiry,
  kBroadcastContact,
};

std::string_view to_string(EventKind kind);

struct DecisionRecord {
  double time = 0.0;
  VehicleId id = 0;
  std::string reason;  // initial | recheck | election
  ScoreMetrics metrics;
  double score = 0.0;
  NodeMode outcome = NodeMode::kSleeping;
  int neighbors = 0;
};

struct ElectionRecord {
  double time = 0.0;
  VehicleId displaced = 0;
  std::vector<ElectionCandidate> candidates;
  std::vector<int> slots;  // parallel to candidates
  std::optional<VehicleId> winner;
  int winning_slot = -1;
  double winner_delay = 0.0;
  double d_score_max = 0.0;
};

struct MapBuildRecord {
  VehicleId id = 0;
  double park_time = 0.0;
  int oracle_cells = 0;
  int observed_cells = 0;
  double completeness = 0.0;
  std::optional<double> time_to_80;  // seconds after parking
};

struct ModeCount {
  double time = 0.0;
  int listening = 0;
  int active = 0;
  int sleeping = 0;

  friend bool operator==(const ModeCount&, const ModeCount&) = default;
};

struct FinalNode {
  VehicleId id = 0;
  NodeMode mode = NodeMode::kListening;
  GeoCoord position;
  double park_time = 0.0;
  CoverageMap scm{1, GeoCoord{}, 30.0};
  double last_score = 0.0;
  int decisions = 0;
};

struct RunStats {
  std::uint64_t events = 0;
  std::uint64_t beacon_ticks = 0;
  std::uint64_t beacons_delivered = 0;
  std::uint64_t beacons_lost = 0;
  std::uint64_t observations_outside = 0;
  std::uint64_t parks = 0;
  std::uint64_t departs = 0;
};

struct RunArtifacts {
  double end_time = 0.0;
  std::vector<DecisionRecord> decisions;
  std::vector<ElectionRecord> elections;
  std::vector<MapBuildRecord> map_build;
  std::vector<ModeCount> mode_counts;  // one entry per change
  std::vector<FinalNode> final_nodes;  // cars parked at the end, by id
  /// Over final nodes that finished listening; active = ActiveRsu.
  NetworkMetrics final_metrics;
  std::optional<BroadcastResult> reachability;
  RunStats stats;
};

/// Deterministic for a given scenario (which carries the seed). Throws
/// InvariantViolation if the event queue ever runs backwards.
RunArtifacts run(const Scenario& s);

/// Share of the oracle's covered cells that `scm` also covers; 1 when the
/// oracle is empty. Throws InputError unless both maps share order, anchor
/// and cell size.
double completeness(const CoverageMap& scm, const CoverageMap& oracle);

/// Best classification per cell over `points`, as seen from a car parked at
/// `parked`.
CoverageMap complete_map(GeoCoord parked, std::span<const GeoCoord> points, const ObstructionSet& obs,
                         const QualityTable& qt, int order, double cell_size);

/// Moving vehicles' positions at `t`, interpolated between trace samples.
/// Vehicles are included only while `t` lies within their sampled span.
struct PositionIndex {
  explicit PositionIndex(const MobilityTrace& trace);
  void at(double t, std::vector<std::pair<VehicleId, GeoCoord>>& out) const;
  double first_time() const { return first_; }
  double last_time() const { return last_; }

 private:
  struct Track {
    VehicleId id;
    std::vector<double> t;
    std::vector<GeoCoord> p;
  };
  std::vector<Track> tracks_;
  double first_ = 0.0, last_ = 0.0;
};

}  // namespace curbnet
