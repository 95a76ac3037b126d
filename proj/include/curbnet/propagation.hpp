#pragma once

// Line-of-sight against building footprints and distance-based link quality.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "curbnet/geo_grid.hpp"

namespace curbnet {

struct Polygon {
  std::vector<GeoCoord> ring;  // open ring, >= 3 vertices
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

/// Simple polygons (possibly overlapping) that block radio line of sight.
class ObstructionSet {
 public:
  ObstructionSet() = default;
  /// Throws InputError for rings with fewer than 3 distinct vertices or
  /// non-finite coordinates. A repeated closing vertex is dropped.
  explicit ObstructionSet(std::vector<std::vector<GeoCoord>> rings);

  const std::vector<Polygon>& polygons() const { return polygons_; }
  bool empty() const { return polygons_.empty(); }

  /// Indices of polygons whose bounding box may touch the box [lo, hi].
  void candidates(GeoCoord lo, GeoCoord hi, std::vector<std::uint32_t>& out) const;

  /// True if p lies inside or on the boundary of any polygon.
  bool covers(GeoCoord p) const;

 private:
  static constexpr double kBucket = 50.0;
  static std::uint64_t bucket_key(std::int64_t bx, std::int64_t by);

  std::vector<Polygon> polygons_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

/// Parses `[[[x,y],...], ...]` or `{"polygons": [...]}`. Throws FormatError.
ObstructionSet parse_obstructions(std::string_view json_text);
ObstructionSet load_obstructions(const std::filesystem::path& path);
std::string obstructions_to_json(const ObstructionSet& obs);

/// Distance thresholds (meters) for quality 5, 4, 3, 2.
struct QualityTable {
  std::array<double, 4> los{70.0, 115.0, 135.0, 155.0};
  std::array<double, 4> nlos{58.0, 65.0, 105.0, 130.0};

  /// Throws ConfigError unless each column is strictly increasing, positive,
  /// and NLOS <= LOS at each level.
  void validate() const;
  double max_range() const;

  friend bool operator==(const QualityTable&, const QualityTable&) = default;
};

/// True iff the open segment a-b touches no polygon edge or interior.
/// Grazing contact counts as blocked.
bool has_los(GeoCoord a, GeoCoord b, const ObstructionSet& obs);

/// Highest quality whose threshold is >= the distance, using the LOS or NLOS
/// column. Level 1 is never produced; beyond the last threshold gives 0.
SignalQuality classify(GeoCoord a, GeoCoord b, const ObstructionSet& obs, const QualityTable& qt);

/// Table lookup only, for callers that already know the LOS state.
SignalQuality quality_for(double dist, bool line_of_sight, const QualityTable& qt);

}  // namespace curbnet
