#include "curbnet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "curbnet/election.hpp"
#include "curbnet/errors.hpp"
#include "curbnet/random.hpp"

namespace curbnet {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kDepart: return "depart";
    case EventKind::kPark: return "park";
    case EventKind::kBeaconTick: return "beacon_tick";
    case EventKind::kDecisionDue: return "decision_due";
    case EventKind::kWakeWindow: return "wake_window";
    case EventKind::kBackoffExpiry: return "backoff_expiry";
    case EventKind::kBroadcastContact: return "broadcast_contact";
  }
  return "unknown";
}

double completeness(const CoverageMap& scm, const CoverageMap& oracle) {
  if (scm.order() != oracle.order() || scm.anchor() != oracle.anchor() || scm.cell_size() != oracle.cell_size()) {
    throw InputError("completeness needs maps on the same window");
  }
  const auto a = scm.levels();
  const auto b = oracle.levels();
  int both = 0, total = 0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (b[k] == 0) continue;
    ++total;
    if (a[k] != 0) ++both;
  }
  return total == 0 ? 1.0 : static_cast<double>(both) / total;
}

CoverageMap complete_map(GeoCoord parked, std::span<const GeoCoord> points, const ObstructionSet& obs,
                         const QualityTable& qt, int order, double cell_size) {
  CoverageMap m(order, parked, cell_size);
  const double r = qt.max_range();
  for (const auto& p : points) {
    if (std::abs(p.x - parked.x) > r || std::abs(p.y - parked.y) > r) continue;
    const SignalQuality q = classify(p, parked, obs, qt);
    if (q.covered()) record_observation(m, cell_of(p, cell_size), q);
  }
  return m;
}

PositionIndex::PositionIndex(const MobilityTrace& trace) {
  std::map<VehicleId, std::size_t> slot;
  for (const auto& s : trace.samples) {
    auto [it, fresh] = slot.try_emplace(s.id, tracks_.size());
    if (fresh) tracks_.push_back({s.id, {}, {}});
    auto& tr = tracks_[it->second];
    tr.t.push_back(s.time);
    tr.p.push_back(s.pos);
  }
  std::sort(tracks_.begin(), tracks_.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  if (!trace.samples.empty()) {
    first_ = trace.samples.front().time;
    last_ = trace.samples.back().time;
  }
}

void PositionIndex::at(double t, std::vector<std::pair<VehicleId, GeoCoord>>& out) const {
  out.clear();
  for (const auto& tr : tracks_) {
    if (t < tr.t.front() || t > tr.t.back()) continue;
    const auto it = std::lower_bound(tr.t.begin(), tr.t.end(), t);
    const auto k = static_cast<std::size_t>(it - tr.t.begin());
    if (tr.t[k] == t || k == 0) {
      out.emplace_back(tr.id, tr.p[k]);
      continue;
    }
    const double f = (t - tr.t[k - 1]) / (tr.t[k] - tr.t[k - 1]);
    const GeoCoord a = tr.p[k - 1], b = tr.p[k];
    out.emplace_back(tr.id, GeoCoord{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
  }
}

namespace {

struct Event {
  double time;
  EventKind kind;
  std::uint64_t seq;
  std::uint64_t payload;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

struct Node {
  NodeState st;
  GeoCoord pos;
  double park_time = 0.0;
  std::vector<double> first_seen;  // per local cell, NaN until observed
  BeaconWatch watch;
  std::map<VehicleId, CoverageMap> cached;  // neighbor RSU maps heard while awake
  bool in_election = false;
};

struct PendingElection {
  std::size_t record = 0;
  std::vector<VehicleId> participants;
};

class Engine {
 public:
  explicit Engine(const Scenario& s)
      : s_(s),
        cfg_(s.config),
        positions_(s.trace),
        loss_rng_(derive_seed(cfg_.rng_seed, 10)),
        policy_{cfg_.weights, cfg_.activation_threshold, cfg_.delta_cov} {}

  RunArtifacts run() {
    end_ = s_.end_time();
    out_.end_time = end_;

    for (std::size_t k = 0; k < s_.events.size(); ++k) {
      const auto& e = s_.events[k];
      if (e.time > end_) continue;
      push(e.time, e.kind == ParkingKind::kPark ? EventKind::kPark : EventKind::kDepart, k);
    }
    if (!s_.trace.samples.empty()) {
      const double period = 1.0 / cfg_.beacon_rate;
      first_tick_ = std::ceil(positions_.first_time() / period - 1e-9);
      schedule_tick(first_tick_);
    }
    const WakeSchedule sched{cfg_.wake_period, cfg_.cch_interval};
    const double first_wake = next_wake(0.0, sched);
    if (!s_.events.empty() && first_wake <= end_) push(first_wake, EventKind::kWakeWindow, 0);
    if (cfg_.broadcast_time && *cfg_.broadcast_time <= end_) push(*cfg_.broadcast_time, EventKind::kBroadcastContact, 0);

    while (!queue_.empty()) {
      const Event ev = queue_.top();
      queue_.pop();
      if (ev.time < now_) {
        throw InvariantViolation(fmt::format("event {} at t={} processed after t={}", to_string(ev.kind), ev.time, now_));
      }
      now_ = ev.time;
      ++out_.stats.events;
      dispatch(ev);
      note_modes();
    }
    finish();
    return std::move(out_);
  }

 private:
  void push(double t, EventKind kind, std::uint64_t payload) { queue_.push({t, kind, seq_++, payload}); }

  void schedule_tick(double index) {
    const double t = index / cfg_.beacon_rate;
    if (t <= end_ + 1e-9 && t <= positions_.last_time() + 1e-9) {
      push(t, EventKind::kBeaconTick, static_cast<std::uint64_t>(index));
    }
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::kPark: on_park(s_.events[ev.payload]); break;
      case EventKind::kDepart: on_depart(s_.events[ev.payload]); break;
      case EventKind::kBeaconTick:
        on_tick();
        schedule_tick(static_cast<double>(ev.payload) + 1.0);
        break;
      case EventKind::kDecisionDue: on_decision_due(static_cast<VehicleId>(ev.payload)); break;
      case EventKind::kWakeWindow:
        on_wake();
        if (now_ + cfg_.wake_period <= end_ + 1e-9) push(now_ + cfg_.wake_period, EventKind::kWakeWindow, 0);
        break;
      case EventKind::kBackoffExpiry: on_backoff_expiry(ev.payload); break;
      case EventKind::kBroadcastContact: on_broadcast(); break;
    }
  }

  // -- parking ---------------------------------------------------------------

  void on_park(const ParkingEvent& e) {
    if (nodes_.count(e.id)) throw InvariantViolation(fmt::format("vehicle {} parks twice", e.id));
    ++out_.stats.parks;
    Node n{NodeState{e.id, NodeMode::kListening, CoverageMap(cfg_.map_order, e.position, cfg_.cell_size)},
           e.position,
           now_,
           std::vector<double>(static_cast<std::size_t>(cfg_.map_order) * cfg_.map_order,
                               std::numeric_limits<double>::quiet_NaN()),
           BeaconWatch(cfg_.miss_threshold),
           {},
           false};
    nodes_.emplace(e.id, std::move(n));
    const double due = now_ + cfg_.listen_duration;
    if (due <= end_ + 1e-9) push(due, EventKind::kDecisionDue, e.id);
  }

  void on_depart(const ParkingEvent& e) {
    auto it = nodes_.find(e.id);
    if (it == nodes_.end()) throw InvariantViolation(fmt::format("vehicle {} departs without being parked", e.id));
    ++out_.stats.departs;
    record_map_build(it->second);
    nodes_.erase(it);
  }

  // -- beacons ---------------------------------------------------------------

  void on_tick() {
    ++out_.stats.beacon_ticks;
    positions_.at(now_, movers_);
    // Parked cars do not beacon as movers.
    std::erase_if(movers_, [&](const auto& m) { return nodes_.count(m.first) != 0; });
    const double r = cfg_.quality.max_range();
    std::vector<VehicleId> changed_rsus;
    std::vector<int> changed_counts;
    for (auto& [id, n] : nodes_) {
      const NodeMode mode = n.st.mode;
      if (mode != NodeMode::kListening && mode != NodeMode::kActiveRsu) continue;
      int changed = 0;
      for (const auto& [mid, p] : movers_) {
        if (std::abs(p.x - n.pos.x) > r || std::abs(p.y - n.pos.y) > r) continue;
        const SignalQuality q = classify(p, n.pos, s_.obstructions, cfg_.quality);
        if (!q.covered()) continue;
        const double loss = cfg_.beacon_loss[static_cast<std::size_t>(q.level())];
        if (loss > 0.0 && loss_rng_.bernoulli(loss)) {
          ++out_.stats.beacons_lost;
          continue;
        }
        ++out_.stats.beacons_delivered;
        const CellIndex c = cell_of(p, cfg_.cell_size);
        const auto before = n.st.scm.at(c);
        const auto res = record_observation(n.st.scm, c, q);
        if (res == ObservationResult::kOutsideWindow) {
          ++out_.stats.observations_outside;
        } else if (res == ObservationResult::kImproved) {
          ++changed;
          if (before && !before->covered()) {
            const CellIndex a = n.st.scm.anchor();
            const int row = c.i - (a.i - n.st.scm.half());
            const int col = c.j - (a.j - n.st.scm.half());
            n.first_seen[static_cast<std::size_t>(row) * cfg_.map_order + col] = now_;
          }
        }
      }
      if (mode == NodeMode::kActiveRsu && changed > 0) {
        changed_rsus.push_back(id);
        changed_counts.push_back(changed);
      }
    }
    for (std::size_t k = 0; k < changed_rsus.size(); ++k) {
      Node& n = nodes_.at(changed_rsus[k]);
      if (n.st.mode != NodeMode::kActiveRsu) continue;
      auto d = on_map_update(n.st, changed_counts[k], [&] { return neighbor_maps(n); }, policy_);
      if (d) log_decision(n, *d, "recheck");
    }
  }

  // -- decisions -------------------------------------------------------------

  bool in_range(const Node& a, const Node& b) const {
    return classify(a.pos, b.pos, s_.obstructions, cfg_.quality).covered();
  }

  std::vector<VehicleId> active_neighbors(const Node& n) const {
    std::vector<VehicleId> ids;
    for (const auto& [id, m] : nodes_) {
      if (id == n.st.id || m.st.mode != NodeMode::kActiveRsu) continue;
      if (in_range(n, m)) ids.push_back(id);
    }
    return ids;
  }

  std::vector<CoverageMap> neighbor_maps(const Node& n) const {
    std::vector<CoverageMap> maps;
    for (VehicleId id : active_neighbors(n)) maps.push_back(nodes_.at(id).st.scm);
    return maps;
  }

  void log_decision(const Node& n, const Decision& d, const char* reason, int neighbors = -1) {
    if (d.score > max_score_) max_score_ = d.score;
    out_.decisions.push_back(
        {now_, n.st.id, reason, d.metrics, d.score, d.outcome, neighbors < 0 ? 0 : neighbors});
  }

  void on_decision_due(VehicleId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || it->second.st.mode != NodeMode::kListening) return;
    Node& n = it->second;
    // A car parked more than once may have a stale event from an earlier stay.
    if (std::abs(n.park_time + cfg_.listen_duration - now_) > 1e-6) return;
    const auto ids = active_neighbors(n);
    std::vector<CoverageMap> maps;
    for (VehicleId nid : ids) maps.push_back(nodes_.at(nid).st.scm);
    const Decision d = decide(n.st, maps, policy_);
    log_decision(n, d, "initial", static_cast<int>(ids.size()));
    if (d.outcome == NodeMode::kSleeping) {
      // Start watching the RSUs that made this car redundant.
      std::set<VehicleId> heard(ids.begin(), ids.end());
      n.watch.observe_window(heard);
      for (VehicleId nid : ids) n.cached.insert_or_assign(nid, nodes_.at(nid).st.scm);
    }
  }

  // -- wake windows and elections ---------------------------------------------

  double current_d_score_max() const {
    if (cfg_.d_score_max) return *cfg_.d_score_max;
    return max_score_ > 0.0 ? max_score_ : 1.0;
  }

  void on_wake() {
    std::map<VehicleId, std::vector<VehicleId>> detected;  // displaced -> sleepers
    for (auto& [id, n] : nodes_) {
      if (n.st.mode != NodeMode::kSleeping || n.in_election) continue;
      std::set<VehicleId> heard;
      for (VehicleId nid : active_neighbors(n)) {
        heard.insert(nid);
        n.cached.insert_or_assign(nid, nodes_.at(nid).st.scm);
      }
      for (VehicleId gone : n.watch.observe_window(heard)) detected[gone].push_back(id);
    }
    for (auto& [gone, sleepers] : detected) {
      // Everyone sets the displaced RSU aside, including sleepers whose miss
      // counter has not run out yet, so one departure starts one election.
      for (auto& [id, n] : nodes_) {
        n.watch.forget(gone);
        n.cached.erase(gone);
      }
      start_election(gone, sleepers);
    }
  }

  void start_election(VehicleId displaced, const std::vector<VehicleId>& sleepers) {
    ElectionRecord rec;
    rec.time = now_;
    rec.displaced = displaced;
    rec.d_score_max = current_d_score_max();
    const BackoffParams params{rec.d_score_max, cfg_.backoff_slots, cfg_.cch_interval};
    PendingElection pending;
    for (VehicleId id : sleepers) {
      Node& n = nodes_.at(id);
      if (n.in_election) continue;
      std::vector<CoverageMap> maps;
      for (const auto& [nid, m] : n.cached) {
        if (n.watch.tracks(nid)) maps.push_back(m);
      }
      const ScoreMetrics m = score_metrics(n.st.scm, build_local_maps(maps));
      const double score = decision_score(m, cfg_.weights);
      if (!(score > cfg_.activation_threshold)) continue;
      rec.candidates.push_back({id, score});
      rec.slots.push_back(backoff_slot(score, params));
      n.st.mode = NodeMode::kElectionCandidate;
      n.st.last_decision_score = score;
      n.in_election = true;
      pending.participants.push_back(id);
    }
    const std::uint64_t seed = derive_seed(cfg_.rng_seed, 1000 + out_.elections.size());
    const ElectionOutcome o = run_election(rec.candidates, params, seed);
    rec.winner = o.winner;
    rec.winning_slot = o.winning_slot;
    rec.winner_delay = o.winner_delay;
    pending.record = out_.elections.size();
    out_.elections.push_back(std::move(rec));
    if (o.winner) {
      pending_.push_back(std::move(pending));
      push(now_ + o.winner_delay, EventKind::kBackoffExpiry, pending_.size() - 1);
    }
  }

  void on_backoff_expiry(std::uint64_t which) {
    const PendingElection& p = pending_.at(which);
    const ElectionRecord& rec = out_.elections.at(p.record);
    for (VehicleId id : p.participants) {
      auto it = nodes_.find(id);
      if (it == nodes_.end()) continue;  // drove away mid-election
      Node& n = it->second;
      n.in_election = false;
      if (rec.winner && *rec.winner == id) {
        Decision d;
        std::vector<CoverageMap> maps;
        for (const auto& [nid, m] : n.cached) {
          if (n.watch.tracks(nid)) maps.push_back(m);
        }
        d.metrics = score_metrics(n.st.scm, build_local_maps(maps));
        d.score = decision_score(d.metrics, cfg_.weights);
        d.outcome = NodeMode::kActiveRsu;
        n.st.mode = NodeMode::kActiveRsu;
        n.st.last_decision_score = d.score;
        n.st.delta_cov = 0;
        n.st.nonzero_at_last_decision = n.st.scm.nonzero_count();
        ++n.st.decisions;
        log_decision(n, d, "election", static_cast<int>(maps.size()));
      } else {
        n.st.mode = NodeMode::kSleeping;
      }
    }
  }

  // -- broadcast ------------------------------------------------------------

  void on_broadcast() {
    std::vector<VehicleId> rsus;
    for (const auto& [id, n] : nodes_) {
      if (n.st.mode == NodeMode::kActiveRsu) rsus.push_back(id);
    }
    BroadcastMessage msg{1, cfg_.broadcast_origin, now_};
    out_.reachability = run_broadcast(s_, rsus, msg);
  }

  // -- bookkeeping ----------------------------------------------------------

  void note_modes() {
    ModeCount c{now_, 0, 0, 0};
    for (const auto& [id, n] : nodes_) {
      switch (n.st.mode) {
        case NodeMode::kListening: ++c.listening; break;
        case NodeMode::kActiveRsu: ++c.active; break;
        case NodeMode::kSleeping:
        case NodeMode::kElectionCandidate: ++c.sleeping; break;
        case NodeMode::kMoving: throw InvariantViolation("parked node in moving mode");
      }
    }
    if (out_.mode_counts.empty() && nodes_.empty()) return;
    if (out_.mode_counts.empty() || out_.mode_counts.back().listening != c.listening ||
        out_.mode_counts.back().active != c.active || out_.mode_counts.back().sleeping != c.sleeping) {
      out_.mode_counts.push_back(c);
    }
  }

  const std::vector<GeoCoord>& trace_points_excluding(VehicleId id) {
    points_.clear();
    for (const auto& smp : s_.trace.samples) {
      if (smp.id != id) points_.push_back(smp.pos);
    }
    return points_;
  }

  void record_map_build(const Node& n) {
    const CoverageMap oracle = complete_map(n.pos, trace_points_excluding(n.st.id), s_.obstructions, cfg_.quality,
                                            cfg_.map_order, cfg_.cell_size);
    MapBuildRecord r;
    r.id = n.st.id;
    r.park_time = n.park_time;
    r.oracle_cells = oracle.nonzero_count();
    r.observed_cells = n.st.scm.nonzero_count();
    r.completeness = completeness(n.st.scm, oracle);
    // Time at which the observed share of oracle cells first reached 80%.
    std::vector<double> times;
    const auto lv = oracle.levels();
    for (std::size_t k = 0; k < lv.size(); ++k) {
      if (lv[k] != 0 && !std::isnan(n.first_seen[k])) times.push_back(n.first_seen[k]);
    }
    std::sort(times.begin(), times.end());
    const auto need = static_cast<std::size_t>(std::ceil(0.8 * r.oracle_cells - 1e-9));
    if (r.oracle_cells == 0) {
      r.time_to_80 = 0.0;
    } else if (need >= 1 && times.size() >= need) {
      r.time_to_80 = std::max(0.0, times[need - 1] - n.park_time);
    }
    out_.map_build.push_back(r);
  }

  void finish() {
    std::vector<CoverageMap> maps;
    std::vector<bool> active;
    for (const auto& [id, n] : nodes_) {
      record_map_build(n);
      out_.final_nodes.push_back({id, n.st.mode, n.pos, n.park_time, n.st.scm, n.st.last_decision_score,
                                  n.st.decisions});
      if (n.st.mode == NodeMode::kListening) continue;
      maps.push_back(n.st.scm);
      active.push_back(n.st.mode == NodeMode::kActiveRsu);
    }
    std::stable_sort(out_.map_build.begin(), out_.map_build.end(), [](const MapBuildRecord& a, const MapBuildRecord& b) {
      return a.park_time != b.park_time ? a.park_time < b.park_time : a.id < b.id;
    });
    out_.final_metrics = evaluate_subset(maps, active);
  }

  const Scenario& s_;
  const ScenarioConfig& cfg_;
  PositionIndex positions_;
  Rng loss_rng_;
  DecisionPolicy policy_;

  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::uint64_t seq_ = 0;
  double now_ = -std::numeric_limits<double>::infinity();
  double end_ = 0.0;
  double first_tick_ = 0.0;
  double max_score_ = 0.0;

  std::map<VehicleId, Node> nodes_;
  std::vector<PendingElection> pending_;
  std::vector<std::pair<VehicleId, GeoCoord>> movers_;
  std::vector<GeoCoord> points_;
  RunArtifacts out_;
};

}  // namespace

RunArtifacts run(const Scenario& s) {
  s.config.validate();
  return Engine(s).run();
}

}  // namespace curbnet
