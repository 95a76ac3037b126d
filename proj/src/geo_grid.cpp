#include "curbnet/geo_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "curbnet/errors.hpp"

namespace curbnet {

double distance(GeoCoord a, GeoCoord b) { return std::hypot(a.x - b.x, a.y - b.y); }

CellRect CellRect::united(const CellRect& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  return CellRect{std::min(i0, other.i0), std::min(j0, other.j0), std::max(i1, other.i1),
                  std::max(j1, other.j1)};
}

CellIndex cell_of(GeoCoord p, double cell_size) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw InputError("cell_of: non-finite coordinate");
  }
  if (!(cell_size > 0.0)) throw InputError("cell_of: cell size must be positive");
  const double fi = std::floor(p.y / cell_size);
  const double fj = std::floor(p.x / cell_size);
  constexpr double kLimit = std::numeric_limits<std::int32_t>::max();
  if (std::abs(fi) > kLimit || std::abs(fj) > kLimit) {
    throw InputError("cell_of: coordinate outside the representable grid");
  }
  return CellIndex{static_cast<std::int32_t>(fi), static_cast<std::int32_t>(fj)};
}

GeoCoord cell_center(CellIndex c, double cell_size) {
  return GeoCoord{(c.j + 0.5) * cell_size, (c.i + 0.5) * cell_size};
}

SignalQuality SignalQuality::of(int level) {
  if (level < 0 || level > kMax) {
    throw InputError(fmt::format("signal quality {} outside 0..{}", level, kMax));
  }
  return SignalQuality(static_cast<std::uint8_t>(level));
}

CoverageMap::CoverageMap(int order, GeoCoord center, double cell_size)
    : order_(order), center_(center), cell_size_(cell_size) {
  if (order < 1 || order % 2 == 0) {
    throw InputError(fmt::format("coverage map order must be odd and >= 1, got {}", order));
  }
  anchor_ = cell_of(center, cell_size);
  cells_.assign(static_cast<std::size_t>(order) * order, 0);
}

CellRect CoverageMap::extent() const {
  const int h = half();
  return CellRect{anchor_.i - h, anchor_.j - h, anchor_.i + h, anchor_.j + h};
}

SignalQuality CoverageMap::at_local(int row, int col) const {
  if (row < 0 || row >= order_ || col < 0 || col >= order_) {
    throw InputError("coverage map local index out of range");
  }
  return SignalQuality::of(cells_[static_cast<std::size_t>(row) * order_ + col]);
}

void CoverageMap::set_local(int row, int col, SignalQuality q) {
  if (row < 0 || row >= order_ || col < 0 || col >= order_) {
    throw InputError("coverage map local index out of range");
  }
  cells_[static_cast<std::size_t>(row) * order_ + col] = static_cast<std::uint8_t>(q.level());
}

CellIndex CoverageMap::global_of(int row, int col) const {
  return CellIndex{anchor_.i - half() + row, anchor_.j - half() + col};
}

std::optional<SignalQuality> CoverageMap::at(CellIndex c) const {
  if (!contains(c)) return std::nullopt;
  return at_local(c.i - (anchor_.i - half()), c.j - (anchor_.j - half()));
}

int CoverageMap::nonzero_count() const {
  return static_cast<int>(std::count_if(cells_.begin(), cells_.end(),
                                        [](std::uint8_t v) { return v != 0; }));
}

ObservationResult record_observation(CoverageMap& m, CellIndex at, SignalQuality q) {
  if (!m.contains(at)) return ObservationResult::kOutsideWindow;
  const int row = at.i - (m.anchor().i - m.half());
  const int col = at.j - (m.anchor().j - m.half());
  if (q <= m.at_local(row, col)) return ObservationResult::kUnchanged;
  m.set_local(row, col, q);
  return ObservationResult::kImproved;
}

std::size_t encoded_payload_size(int order) {
  const std::size_t bits = static_cast<std::size_t>(order) * order * 3;
  return (bits + 7) / 8;
}

std::size_t encoded_size(int order) { return encoded_payload_size(order) + 4; }

namespace {

std::uint16_t quantize_coord(double v) {
  const double q = std::floor(v / kCoordResolution);
  if (!(q >= 0.0 && q <= 65535.0)) {
    throw InputError(fmt::format("coordinate {} m cannot be encoded in 16 bits at {} m", v,
                                 kCoordResolution));
  }
  return static_cast<std::uint16_t>(q);
}

}  // namespace

std::vector<std::uint8_t> encode(const CoverageMap& m) {
  const int order = m.order();
  std::vector<std::uint8_t> out(encoded_size(order), 0);
  std::size_t bit = 0;
  for (std::uint8_t level : m.levels()) {
    for (int b = 2; b >= 0; --b, ++bit) {
      if ((level >> b) & 1U) out[bit / 8] |= static_cast<std::uint8_t>(0x80U >> (bit % 8));
    }
  }
  const std::size_t off = encoded_payload_size(order);
  const std::uint16_t qx = quantize_coord(m.center().x);
  const std::uint16_t qy = quantize_coord(m.center().y);
  out[off + 0] = static_cast<std::uint8_t>(qx >> 8);
  out[off + 1] = static_cast<std::uint8_t>(qx & 0xFF);
  out[off + 2] = static_cast<std::uint8_t>(qy >> 8);
  out[off + 3] = static_cast<std::uint8_t>(qy & 0xFF);
  return out;
}

CoverageMap decode(std::span<const std::uint8_t> bytes, int order, double cell_size) {
  if (order < 1 || order % 2 == 0) {
    throw FormatError(fmt::format("coverage map order must be odd and >= 1, got {}", order));
  }
  if (bytes.size() != encoded_size(order)) {
    throw FormatError(fmt::format("coverage map of order {} needs {} bytes, got {}", order,
                                  encoded_size(order), bytes.size()));
  }
  const std::size_t off = encoded_payload_size(order);
  const auto qx = static_cast<std::uint16_t>((bytes[off] << 8) | bytes[off + 1]);
  const auto qy = static_cast<std::uint16_t>((bytes[off + 2] << 8) | bytes[off + 3]);
  CoverageMap m(order, GeoCoord{qx * kCoordResolution, qy * kCoordResolution}, cell_size);

  auto bit_at = [&](std::size_t bit) { return (bytes[bit / 8] >> (7 - bit % 8)) & 1U; };
  std::size_t bit = 0;
  for (int row = 0; row < order; ++row) {
    for (int col = 0; col < order; ++col) {
      unsigned level = 0;
      for (int b = 0; b < 3; ++b, ++bit) level = (level << 1) | bit_at(bit);
      if (level > static_cast<unsigned>(SignalQuality::kMax)) {
        throw FormatError(fmt::format("invalid coverage level {} at cell ({}, {})", level, row, col));
      }
      m.set_local(row, col, SignalQuality::of(static_cast<int>(level)));
    }
  }
  for (; bit < off * 8; ++bit) {
    if (bit_at(bit)) throw FormatError("non-zero padding bits in coverage map payload");
  }
  return m;
}

}  // namespace curbnet
