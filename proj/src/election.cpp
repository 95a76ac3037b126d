#include "curbnet/election.hpp"

#include <algorithm>
#include <cmath>

#include "curbnet/errors.hpp"
#include "curbnet/random.hpp"

namespace curbnet {

void WakeSchedule::validate() const {
  if (!(period > 0.0)) throw ConfigError("wake period must be positive");
  if (!(listen_window > 0.0) || listen_window > period) {
    throw ConfigError("wake listen window must be positive and no longer than the period");
  }
}

double next_wake(double t_now, const WakeSchedule& sched) {
  if (!(sched.period > 0.0)) throw ConfigError("wake period must be positive");
  const double k = std::floor(t_now / sched.period);
  double t = k * sched.period;
  // Relative slack absorbs representation error of t_now (e.g. 45.000000001).
  if (t < t_now - 1e-9 * std::max(1.0, std::abs(t_now))) t = (k + 1.0) * sched.period;
  return t;
}

double duty_cycle(const WakeSchedule& sched) {
  sched.validate();
  return sched.listen_window / sched.period;
}

void BackoffParams::validate() const {
  if (!(d_score_max > 0.0)) throw ConfigError("d_score_max must be positive");
  if (slots < 1) throw ConfigError("backoff slots must be >= 1");
  if (!(t_cch > 0.0)) throw ConfigError("CCH interval must be positive");
}

int backoff_slot(double d_score, const BackoffParams& p) {
  p.validate();
  const double d = std::clamp(d_score, 0.0, p.d_score_max);
  return static_cast<int>(std::floor((1.0 - d / p.d_score_max) * p.slots));
}

double backoff_time(double d_score, const BackoffParams& p) { return backoff_slot(d_score, p) * p.t_cch; }

double backoff_time(double d_score, double d_score_max, int slots, double t_cch) {
  return backoff_time(d_score, BackoffParams{d_score_max, slots, t_cch});
}

ElectionOutcome run_election(std::span<const ElectionCandidate> candidates, const BackoffParams& p,
                             std::uint64_t seed) {
  p.validate();
  ElectionOutcome out;
  if (candidates.empty()) return out;

  std::vector<int> slots;
  slots.reserve(candidates.size());
  for (const auto& c : candidates) slots.push_back(backoff_slot(c.d_score, p));
  out.winning_slot = *std::min_element(slots.begin(), slots.end());

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (slots[k] == out.winning_slot) out.tied.push_back(candidates[k].id);
  }
  Rng rng(seed);
  const VehicleId winner = out.tied[rng.below(out.tied.size())];
  out.winner = winner;
  out.winner_delay = out.winning_slot * p.t_cch;
  for (const auto& c : candidates) {
    if (c.id != winner) out.suppressed.push_back(c.id);
  }
  return out;
}

std::vector<VehicleId> BeaconWatch::observe_window(const std::set<VehicleId>& heard) {
  std::vector<VehicleId> displaced;
  for (auto it = missed_.begin(); it != missed_.end();) {
    if (heard.count(it->first)) {
      it->second = 0;
      ++it;
    } else if (++it->second >= miss_threshold_) {
      displaced.push_back(it->first);
      it = missed_.erase(it);
    } else {
      ++it;
    }
  }
  for (VehicleId id : heard) missed_.try_emplace(id, 0);
  return displaced;
}

int BeaconWatch::missed(VehicleId rsu) const {
  auto it = missed_.find(rsu);
  return it == missed_.end() ? 0 : it->second;
}

}  // namespace curbnet
