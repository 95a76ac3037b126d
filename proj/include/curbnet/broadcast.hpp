#pragma once

// Emergency-message dissemination in sparse networks.
//
// This is a simplified store-carry-forward scheme, not a full UV-CAST: links
// exist wherever classify() > 0, a message floods a connected cluster within
// one tick, and only the cluster's convex-hull vertices (found by gift
// wrapping) keep carrying it afterwards. Active parked RSUs are permanent
// carriers, and with backhaul enabled an informed RSU hands the message to
// every other RSU, so each of them starts a new flood as an extra origin.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "curbnet/geo_grid.hpp"
#include "curbnet/propagation.hpp"
#include "curbnet/selforg.hpp"

namespace curbnet {

struct Scenario;

/// Indices of the strict convex-hull vertices, ascending. Points on a hull
/// edge but not at a corner are excluded; coincident points count once (the
/// lowest index). Two or fewer points are all returned.
std::vector<std::size_t> select_boundary_nodes(std::span<const GeoCoord> cluster);

struct BroadcastMessage {
  std::uint64_t id = 1;
  GeoCoord origin;
  double created = 0.0;
};

struct ReachabilityPoint {
  double t = 0.0;  // seconds since creation
  int count = 0;   // informed moving vehicles

  friend bool operator==(const ReachabilityPoint&, const ReachabilityPoint&) = default;
};

struct BroadcastNode {
  VehicleId id = 0;
  GeoCoord pos;
  bool rsu = false;
};

/// One message spreading over successive snapshots of the network.
class BroadcastProcess {
 public:
  BroadcastProcess(const ObstructionSet& obs, const QualityTable& qt, bool rsu_backhaul);

  /// Marks a node informed and carrying.
  void seed(VehicleId id);

  /// Delivers over one snapshot. Returns how many nodes were newly informed.
  int step(std::span<const BroadcastNode> nodes);

  bool informed(VehicleId id) const { return informed_.count(id) != 0; }
  bool carrying(VehicleId id) const;
  std::size_t informed_count() const { return informed_.size(); }

 private:
  const ObstructionSet* obs_;
  const QualityTable* qt_;
  bool backhaul_;
  std::unordered_map<VehicleId, bool> informed_;  // id -> carrier
};

struct BroadcastOptions {
  bool rsu_backhaul = true;
  double horizon = 1800.0;  // seconds after creation
};

struct BroadcastResult {
  std::vector<ReachabilityPoint> series;
  int population = 0;  // moving vehicles seen at creation or later
  std::optional<double> time_to_90;
  std::optional<double> time_to_full;
};

/// Replays the scenario's trace from the message creation time. `rsus` are
/// parked cars acting as RSUs; those not parked at creation are ignored.
BroadcastResult run_broadcast(const Scenario& s, std::span<const VehicleId> rsus, const BroadcastMessage& msg,
                              const BroadcastOptions& opt = {});

/// Parked cars (park event at or before `t`, no departure since) and their
/// positions.
std::vector<BroadcastNode> parked_at(const Scenario& s, double t);

}  // namespace curbnet
