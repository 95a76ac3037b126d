#include "curbnet/broadcast.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "curbnet/scenario.hpp"

namespace curbnet {

namespace {

double cross3(GeoCoord o, GeoCoord a, GeoCoord b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double dist2(GeoCoord a, GeoCoord b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<std::size_t> select_boundary_nodes(std::span<const GeoCoord> pts) {
  std::vector<std::size_t> out;
  if (pts.size() <= 2) {
    for (std::size_t k = 0; k < pts.size(); ++k) out.push_back(k);
    return out;
  }
  // Distinct positions, lowest index kept.
  std::vector<std::size_t> idx;
  {
    std::map<std::pair<double, double>, std::size_t> seen;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (seen.emplace(std::pair{pts[k].x, pts[k].y}, k).second) idx.push_back(k);
    }
  }
  if (idx.size() == 1) return idx;

  // Leftmost, then lowest, point is always a corner.
  std::size_t start = idx.front();
  for (std::size_t k : idx) {
    if (pts[k].x < pts[start].x || (pts[k].x == pts[start].x && pts[k].y < pts[start].y)) start = k;
  }
  std::size_t cur = start;
  do {
    out.push_back(cur);
    std::size_t next = cur == idx.front() ? idx[1] : idx.front();
    for (std::size_t k : idx) {
      if (k == cur) continue;
      const double c = cross3(pts[cur], pts[next], pts[k]);
      // Clockwise-most candidate; on a tie keep the farther point so
      // collinear edge points are skipped.
      if (c < 0.0 || (c == 0.0 && dist2(pts[cur], pts[k]) > dist2(pts[cur], pts[next]))) next = k;
    }
    cur = next;
  } while (cur != start && out.size() <= idx.size());
  std::sort(out.begin(), out.end());
  return out;
}

BroadcastProcess::BroadcastProcess(const ObstructionSet& obs, const QualityTable& qt, bool rsu_backhaul)
    : obs_(&obs), qt_(&qt), backhaul_(rsu_backhaul) {}

void BroadcastProcess::seed(VehicleId id) { informed_[id] = true; }

bool BroadcastProcess::carrying(VehicleId id) const {
  auto it = informed_.find(id);
  return it != informed_.end() && it->second;
}

int BroadcastProcess::step(std::span<const BroadcastNode> nodes) {
  const std::size_t n = nodes.size();
  if (n == 0) return 0;

  // Links: bucket by max range, then classify candidate pairs.
  const double range = qt_->max_range();
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  auto key = [](std::int64_t bx, std::int64_t by) {
    return (static_cast<std::uint64_t>(bx) << 32) ^ static_cast<std::uint64_t>(by & 0xFFFFFFFF);
  };
  for (std::size_t k = 0; k < n; ++k) {
    grid[key(static_cast<std::int64_t>(std::floor(nodes[k].pos.x / range)),
             static_cast<std::int64_t>(std::floor(nodes[k].pos.y / range)))]
        .push_back(k);
  }
  UnionFind uf(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto bx = static_cast<std::int64_t>(std::floor(nodes[a].pos.x / range));
    const auto by = static_cast<std::int64_t>(std::floor(nodes[a].pos.y / range));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(key(bx + dx, by + dy));
        if (it == grid.end()) continue;
        for (std::size_t b : it->second) {
          if (b <= a || uf.find(a) == uf.find(b)) continue;
          if (classify(nodes[a].pos, nodes[b].pos, *obs_, *qt_).covered()) uf.unite(a, b);
        }
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t k = 0; k < n; ++k) comps[uf.find(k)].push_back(k);

  int newly = 0;
  bool again = true;
  while (again) {
    again = false;
    bool rsu_informed = false;
    for (auto& [root, members] : comps) {
      bool has_carrier = false, has_uninformed = false;
      for (std::size_t k : members) {
        if (carrying(nodes[k].id)) has_carrier = true;
        if (!informed(nodes[k].id)) has_uninformed = true;
      }
      if (!has_carrier || !has_uninformed) continue;
      // Flood the cluster, then hand carrying duty to its boundary.
      std::vector<GeoCoord> pos;
      pos.reserve(members.size());
      for (std::size_t k : members) {
        auto [it, fresh] = informed_.try_emplace(nodes[k].id, false);
        if (fresh) {
          ++newly;
          if (nodes[k].rsu) rsu_informed = true;
        }
        it->second = nodes[k].rsu;
        pos.push_back(nodes[k].pos);
      }
      for (std::size_t h : select_boundary_nodes(pos)) informed_[nodes[members[h]].id] = true;
    }
    if (backhaul_ && rsu_informed) {
      for (const auto& node : nodes) {
        if (!node.rsu) continue;
        auto [it, fresh] = informed_.try_emplace(node.id, true);
        it->second = true;
        if (fresh) {
          ++newly;
          again = true;
        }
      }
    }
  }
  return newly;
}

std::vector<BroadcastNode> parked_at(const Scenario& s, double t) {
  std::map<VehicleId, std::optional<GeoCoord>> state;
  for (const auto& e : s.events) {
    if (e.time > t) break;
    state[e.id] = e.kind == ParkingKind::kPark ? std::optional<GeoCoord>(e.position) : std::nullopt;
  }
  std::vector<BroadcastNode> out;
  for (const auto& [id, pos] : state) {
    if (pos) out.push_back({id, *pos, true});
  }
  return out;
}

BroadcastResult run_broadcast(const Scenario& s, std::span<const VehicleId> rsus, const BroadcastMessage& msg,
                              const BroadcastOptions& opt) {
  BroadcastResult res;
  std::vector<BroadcastNode> fixed;
  {
    const std::vector<VehicleId> wanted(rsus.begin(), rsus.end());
    for (const auto& p : parked_at(s, msg.created)) {
      if (std::find(wanted.begin(), wanted.end(), p.id) != wanted.end()) fixed.push_back(p);
    }
  }
  auto is_fixed = [&](VehicleId id) {
    return std::any_of(fixed.begin(), fixed.end(), [&](const BroadcastNode& f) { return f.id == id; });
  };

  // Trace snapshots from creation to the horizon.
  const auto& smp = s.trace.samples;
  auto it = std::lower_bound(smp.begin(), smp.end(), msg.created,
                             [](const TraceSample& a, double t) { return a.time < t - 1e-9; });
  const double end = msg.created + opt.horizon;
  std::map<VehicleId, bool> population;
  for (auto p = it; p != smp.end() && p->time <= end + 1e-9; ++p) {
    if (!is_fixed(p->id)) population.emplace(p->id, true);
  }
  res.population = static_cast<int>(population.size());

  BroadcastProcess proc(s.obstructions, s.config.quality, opt.rsu_backhaul);
  std::vector<BroadcastNode> nodes;
  bool seeded = false;
  const int need90 = static_cast<int>(std::ceil(0.9 * res.population - 1e-9));
  auto informed_movers = [&] {
    int c = 0;
    for (const auto& [id, _] : population) c += proc.informed(id) ? 1 : 0;
    return c;
  };

  while (it != smp.end() && it->time <= end + 1e-9) {
    const double t = it->time;
    nodes.assign(fixed.begin(), fixed.end());
    for (; it != smp.end() && it->time == t; ++it) {
      if (!is_fixed(it->id)) nodes.push_back({it->id, it->pos, false});
    }
    if (!seeded) {
      // The vehicle closest to the incident emits the message.
      const BroadcastNode* src = nullptr;
      for (const auto& nd : nodes) {
        if (nd.rsu) continue;
        if (!src || dist2(nd.pos, msg.origin) < dist2(src->pos, msg.origin)) src = &nd;
      }
      if (src) {
        proc.seed(src->id);
        seeded = true;
      }
    }
    proc.step(nodes);
    const int count = informed_movers();
    const double rel = t - msg.created;
    res.series.push_back({rel, count});
    if (!res.time_to_90 && res.population > 0 && count >= need90) res.time_to_90 = rel;
    if (!res.time_to_full && res.population > 0 && count == res.population) {
      res.time_to_full = rel;
      break;
    }
  }
  if (res.series.empty()) res.series.push_back({0.0, 0});
  return res;
}

}  // namespace curbnet
