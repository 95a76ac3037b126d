#pragma once

// Global cell grid and self-observed coverage maps.
//
// The plane is a scenario-local metric frame (x east, y north, meters). It is
// cut into square cells of a fixed size shared by every vehicle, so two nodes
// that compute the cell of the same point always agree. Row i follows y and
// column j follows x.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace curbnet {

struct GeoCoord {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GeoCoord&, const GeoCoord&) = default;
};

double distance(GeoCoord a, GeoCoord b);

/// Global cell index. Non-negative for every point inside a scenario (whose
/// frame starts at the origin); map windows near the origin may extend into
/// negative indices, which simply never receive observations.
struct CellIndex {
  std::int32_t i = 0;  // row
  std::int32_t j = 0;  // column

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Inclusive rectangle of cells. Empty when i1 < i0.
struct CellRect {
  std::int32_t i0 = 0;
  std::int32_t j0 = 0;
  std::int32_t i1 = -1;
  std::int32_t j1 = -1;

  bool empty() const { return i1 < i0 || j1 < j0; }
  std::int32_t rows() const { return empty() ? 0 : i1 - i0 + 1; }
  std::int32_t cols() const { return empty() ? 0 : j1 - j0 + 1; }
  bool contains(CellIndex c) const {
    return c.i >= i0 && c.i <= i1 && c.j >= j0 && c.j <= j1;
  }
  /// Smallest rectangle holding both.
  CellRect united(const CellRect& other) const;

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

/// Throws InputError for non-finite coordinates or a non-positive cell size.
CellIndex cell_of(GeoCoord p, double cell_size);

/// Geographic center of a cell.
GeoCoord cell_center(CellIndex c, double cell_size);

/// Coverage level: 0 is no coverage, 5 is excellent signal.
class SignalQuality {
 public:
  static constexpr int kMax = 5;

  constexpr SignalQuality() = default;

  /// Throws InputError outside 0..5.
  static SignalQuality of(int level);

  constexpr int level() const { return level_; }
  constexpr bool covered() const { return level_ > 0; }

  friend constexpr auto operator<=>(SignalQuality, SignalQuality) = default;

 private:
  constexpr explicit SignalQuality(std::uint8_t level) : level_(level) {}
  std::uint8_t level_ = 0;
};

enum class ObservationResult { kOutsideWindow, kUnchanged, kImproved };

/// Square window of odd order centered on a vehicle.
class CoverageMap {
 public:
  /// Throws InputError if order is even or < 1, the center is non-finite or
  /// the cell size is not positive.
  CoverageMap(int order, GeoCoord center, double cell_size);

  int order() const { return order_; }
  int half() const { return order_ / 2; }
  GeoCoord center() const { return center_; }
  CellIndex anchor() const { return anchor_; }
  double cell_size() const { return cell_size_; }
  CellRect extent() const;

  SignalQuality at_local(int row, int col) const;
  void set_local(int row, int col, SignalQuality q);
  CellIndex global_of(int row, int col) const;

  bool contains(CellIndex c) const { return extent().contains(c); }
  /// Empty outside the window.
  std::optional<SignalQuality> at(CellIndex c) const;

  int nonzero_count() const;
  bool empty() const { return nonzero_count() == 0; }

  /// Raw row-major levels, order*order entries.
  std::span<const std::uint8_t> levels() const { return cells_; }

  friend bool operator==(const CoverageMap&, const CoverageMap&) = default;

 private:
  int order_;
  GeoCoord center_;
  double cell_size_;
  CellIndex anchor_;
  std::vector<std::uint8_t> cells_;
};

/// Raises the cell at a global index to max(previous, q). Observations
/// outside the map window leave the map untouched and report so.
ObservationResult record_observation(CoverageMap& m, CellIndex at, SignalQuality q);

// Wire codec.
//
// Layout: the order*order levels are packed row-major, 3 bits each, most
// significant bit first, zero-padded to a byte boundary. The center follows as
// two big-endian uint16 fields (x then y) holding floor(coord / 5 m), i.e.
// unsigned offsets from the scenario origin at 5 m resolution.
inline constexpr double kCoordResolution = 5.0;

std::size_t encoded_payload_size(int order);
std::size_t encoded_size(int order);

/// Throws InputError if the center cannot be represented (negative or beyond
/// 65535 * 5 m).
std::vector<std::uint8_t> encode(const CoverageMap& m);

/// Inverse of encode. The decoded center is the quantized one and the anchor
/// is recomputed from it with `cell_size`. Throws FormatError on a wrong
/// length, a level of 6 or 7, or non-zero padding bits.
CoverageMap decode(std::span<const std::uint8_t> bytes, int order, double cell_size = 30.0);

}  // namespace curbnet
