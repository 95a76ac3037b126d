#pragma once

// Synchronized wake-ups for sleeping parked cars and the silent backoff
// election that replaces an RSU which drove away.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "curbnet/selforg.hpp"

namespace curbnet {

/// Sleeping OBUs wake when (t mod period) == 0 and listen for one CCH interval.
struct WakeSchedule {
  double period = 15.0;
  double listen_window = 0.050;

  /// Throws ConfigError unless 0 < listen_window <= period.
  void validate() const;
};

/// Smallest t >= t_now with t mod period == 0.
double next_wake(double t_now, const WakeSchedule& sched);

/// Fraction of time a sleeping OBU has its radio on.
double duty_cycle(const WakeSchedule& sched);

struct BackoffParams {
  double d_score_max = 1.0;
  int slots = 40;
  double t_cch = 0.050;

  /// Throws ConfigError when d_score_max <= 0, slots < 1 or t_cch <= 0.
  void validate() const;
};

/// floor((1 - clamp(d, 0, max) / max) * slots). Throws ConfigError on
/// invalid params.
int backoff_slot(double d_score, const BackoffParams& p);

/// backoff_slot(...) * t_cch, in seconds.
double backoff_time(double d_score, const BackoffParams& p);
double backoff_time(double d_score, double d_score_max, int slots, double t_cch);

struct ElectionCandidate {
  VehicleId id = 0;
  double d_score = 0.0;
};

struct ElectionOutcome {
  std::optional<VehicleId> winner;
  std::vector<VehicleId> suppressed;  // every other candidate, input order
  std::vector<VehicleId> tied;        // candidates sharing the winning slot, input order
  int winning_slot = -1;
  double winner_delay = 0.0;  // seconds after the election starts
};

/// Earliest backoff slot wins; ties go to a seeded uniform pick, standing in
/// for MAC contention. An empty candidate list has no winner.
ElectionOutcome run_election(std::span<const ElectionCandidate> candidates, const BackoffParams& p,
                             std::uint64_t seed);

/// Per sleeping node: which RSUs it expects to hear and how many wake windows
/// in a row each one was missing.
class BeaconWatch {
 public:
  explicit BeaconWatch(int miss_threshold = 3) : miss_threshold_(miss_threshold) {}

  /// Called once per wake window with the RSUs heard in it. Returns RSUs now
  /// considered displaced; they are forgotten.
  std::vector<VehicleId> observe_window(const std::set<VehicleId>& heard);

  void forget(VehicleId rsu) { missed_.erase(rsu); }
  bool tracks(VehicleId rsu) const { return missed_.count(rsu) != 0; }
  int missed(VehicleId rsu) const;
  int miss_threshold() const { return miss_threshold_; }

 private:
  int miss_threshold_;
  std::map<VehicleId, int> missed_;
};

}  // namespace curbnet
