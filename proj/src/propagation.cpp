#include "curbnet/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "curbnet/errors.hpp"

namespace curbnet {

namespace {

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Even-odd rule; boundary points are handled by the caller's edge tests.
bool inside_ring(const std::vector<GeoCoord>& ring, GeoCoord p) {
  bool in = false;
  const std::size_t n = ring.size();
  for (std::size_t k = 0, prev = n - 1; k < n; prev = k++) {
    const GeoCoord& u = ring[k];
    const GeoCoord& v = ring[prev];
    if ((u.y > p.y) != (v.y > p.y)) {
      const double x_cross = u.x + (p.y - u.y) * (v.x - u.x) / (v.y - u.y);
      if (p.x < x_cross) in = !in;
    }
  }
  return in;
}

bool on_segment(GeoCoord p, GeoCoord c, GeoCoord d) {
  if (cross(d.x - c.x, d.y - c.y, p.x - c.x, p.y - c.y) != 0.0) return false;
  return p.x >= std::min(c.x, d.x) && p.x <= std::max(c.x, d.x) && p.y >= std::min(c.y, d.y) &&
         p.y <= std::max(c.y, d.y);
}

// Does the open segment (a, b) meet the closed segment [c, d]?
bool open_segment_hits_edge(GeoCoord a, GeoCoord b, GeoCoord c, GeoCoord d) {
  const double rx = b.x - a.x, ry = b.y - a.y;
  const double sx = d.x - c.x, sy = d.y - c.y;
  const double qx = c.x - a.x, qy = c.y - a.y;
  const double denom = cross(rx, ry, sx, sy);
  if (denom != 0.0) {
    const double t = cross(qx, qy, sx, sy) / denom;
    const double u = cross(qx, qy, rx, ry) / denom;
    return t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0;
  }
  if (cross(qx, qy, rx, ry) != 0.0) return false;  // parallel, not collinear
  const double rr = rx * rx + ry * ry;
  const double t0 = (qx * rx + qy * ry) / rr;
  const double t1 = ((d.x - a.x) * rx + (d.y - a.y) * ry) / rr;
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(1.0, std::max(t0, t1));
  return lo < hi || (lo == hi && lo > 0.0 && lo < 1.0);
}

bool polygon_blocks(const Polygon& poly, GeoCoord a, GeoCoord b) {
  const auto& ring = poly.ring;
  const std::size_t n = ring.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (open_segment_hits_edge(a, b, ring[k], ring[(k + 1) % n])) return true;
  }
  // No boundary contact: the open segment is entirely inside or outside.
  return inside_ring(ring, GeoCoord{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0});
}

}  // namespace

std::uint64_t ObstructionSet::bucket_key(std::int64_t bx, std::int64_t by) {
  return (static_cast<std::uint64_t>(bx) << 32) ^ static_cast<std::uint64_t>(by & 0xFFFFFFFF);
}

ObstructionSet::ObstructionSet(std::vector<std::vector<GeoCoord>> rings) {
  polygons_.reserve(rings.size());
  for (std::size_t idx = 0; idx < rings.size(); ++idx) {
    auto& ring = rings[idx];
    if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    if (ring.size() < 3) {
      throw InputError(fmt::format("obstruction polygon {} has fewer than 3 vertices", idx));
    }
    Polygon poly;
    poly.min_x = poly.min_y = std::numeric_limits<double>::infinity();
    poly.max_x = poly.max_y = -std::numeric_limits<double>::infinity();
    for (const GeoCoord& p : ring) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw InputError(fmt::format("obstruction polygon {} has a non-finite vertex", idx));
      }
      poly.min_x = std::min(poly.min_x, p.x);
      poly.min_y = std::min(poly.min_y, p.y);
      poly.max_x = std::max(poly.max_x, p.x);
      poly.max_y = std::max(poly.max_y, p.y);
    }
    poly.ring = std::move(ring);
    const auto id = static_cast<std::uint32_t>(polygons_.size());
    const auto bx0 = static_cast<std::int64_t>(std::floor(poly.min_x / kBucket));
    const auto bx1 = static_cast<std::int64_t>(std::floor(poly.max_x / kBucket));
    const auto by0 = static_cast<std::int64_t>(std::floor(poly.min_y / kBucket));
    const auto by1 = static_cast<std::int64_t>(std::floor(poly.max_y / kBucket));
    for (auto bx = bx0; bx <= bx1; ++bx) {
      for (auto by = by0; by <= by1; ++by) buckets_[bucket_key(bx, by)].push_back(id);
    }
    polygons_.push_back(std::move(poly));
  }
}

void ObstructionSet::candidates(GeoCoord lo, GeoCoord hi, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (polygons_.empty()) return;
  const auto bx0 = static_cast<std::int64_t>(std::floor(lo.x / kBucket));
  const auto bx1 = static_cast<std::int64_t>(std::floor(hi.x / kBucket));
  const auto by0 = static_cast<std::int64_t>(std::floor(lo.y / kBucket));
  const auto by1 = static_cast<std::int64_t>(std::floor(hi.y / kBucket));
  for (auto bx = bx0; bx <= bx1; ++bx) {
    for (auto by = by0; by <= by1; ++by) {
      auto it = buckets_.find(bucket_key(bx, by));
      if (it == buckets_.end()) continue;
      for (std::uint32_t id : it->second) {
        const Polygon& p = polygons_[id];
        if (p.max_x < lo.x || p.min_x > hi.x || p.max_y < lo.y || p.min_y > hi.y) continue;
        out.push_back(id);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

bool ObstructionSet::covers(GeoCoord p) const {
  std::vector<std::uint32_t> ids;
  candidates(p, p, ids);
  for (std::uint32_t id : ids) {
    const auto& ring = polygons_[id].ring;
    if (inside_ring(ring, p)) return true;
    for (std::size_t k = 0; k < ring.size(); ++k) {
      if (on_segment(p, ring[k], ring[(k + 1) % ring.size()])) return true;
    }
  }
  return false;
}

ObstructionSet parse_obstructions(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("obstructions: ") + e.what());
  }
  const nlohmann::json* rings = &doc;
  if (doc.is_object()) {
    if (!doc.contains("polygons")) throw FormatError("obstructions: missing 'polygons' array");
    rings = &doc.at("polygons");
  }
  if (!rings->is_array()) throw FormatError("obstructions: expected an array of rings");
  std::vector<std::vector<GeoCoord>> out;
  for (std::size_t r = 0; r < rings->size(); ++r) {
    const auto& ring = (*rings)[r];
    if (!ring.is_array()) throw FormatError(fmt::format("obstructions: ring {} is not an array", r));
    std::vector<GeoCoord> pts;
    for (const auto& pt : ring) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        throw FormatError(fmt::format("obstructions: ring {} has a vertex that is not [x, y]", r));
      }
      pts.push_back(GeoCoord{pt[0].get<double>(), pt[1].get<double>()});
    }
    out.push_back(std::move(pts));
  }
  try {
    return ObstructionSet(std::move(out));
  } catch (const InputError& e) {
    throw FormatError(e.what());
  }
}

ObstructionSet load_obstructions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open obstruction file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_obstructions(ss.str());
}

std::string obstructions_to_json(const ObstructionSet& obs) {
  nlohmann::json rings = nlohmann::json::array();
  for (const auto& poly : obs.polygons()) {
    nlohmann::json ring = nlohmann::json::array();
    for (const auto& p : poly.ring) ring.push_back({p.x, p.y});
    rings.push_back(std::move(ring));
  }
  return nlohmann::json{{"polygons", rings}}.dump();
}

void QualityTable::validate() const {
  auto check = [](const std::array<double, 4>& col, const char* name) {
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (!(col[k] > 0.0)) throw ConfigError(fmt::format("quality.{} thresholds must be positive", name));
      if (k > 0 && !(col[k] > col[k - 1])) {
        throw ConfigError(fmt::format("quality.{} thresholds must be strictly increasing", name));
      }
    }
  };
  check(los, "los");
  check(nlos, "nlos");
  for (std::size_t k = 0; k < 4; ++k) {
    if (nlos[k] > los[k]) throw ConfigError("quality.nlos threshold exceeds quality.los at the same level");
  }
}

double QualityTable::max_range() const { return std::max(los.back(), nlos.back()); }

bool has_los(GeoCoord a, GeoCoord b, const ObstructionSet& obs) {
  if (a == b || obs.empty()) return true;
  // Fixed argument order keeps the result exactly symmetric.
  if (std::tie(b.x, b.y) < std::tie(a.x, a.y)) std::swap(a, b);
  thread_local std::vector<std::uint32_t> ids;
  obs.candidates(GeoCoord{std::min(a.x, b.x), std::min(a.y, b.y)},
                 GeoCoord{std::max(a.x, b.x), std::max(a.y, b.y)}, ids);
  for (std::uint32_t id : ids) {
    if (polygon_blocks(obs.polygons()[id], a, b)) return false;
  }
  return true;
}

SignalQuality quality_for(double dist, bool line_of_sight, const QualityTable& qt) {
  const auto& col = line_of_sight ? qt.los : qt.nlos;
  for (std::size_t k = 0; k < col.size(); ++k) {
    if (dist <= col[k]) return SignalQuality::of(5 - static_cast<int>(k));
  }
  return SignalQuality{};
}

SignalQuality classify(GeoCoord a, GeoCoord b, const ObstructionSet& obs, const QualityTable& qt) {
  const double d = distance(a, b);
  if (d > qt.max_range()) return SignalQuality{};
  // Both columns agree below the smallest threshold of either, skip the LOS test.
  if (d <= std::min(qt.los[0], qt.nlos[0])) return SignalQuality::of(5);
  return quality_for(d, has_los(a, b, obs), qt);
}

}  // namespace curbnet
