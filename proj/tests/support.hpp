#pragma once

// Reference implementations and fixtures shared by the unit tests and the
// acceptance binary. The oracles recompute everything per cell from the raw
// maps, with no shared code paths into the library's flattened grids.

#include <algorithm>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "curbnet/geo_grid.hpp"
#include "curbnet/random.hpp"
#include "curbnet/selforg.hpp"

namespace curbnet::testing {

struct CellStat {
  int best = 0;
  int count = 0;
};

/// Per geographic cell: best level and number of maps covering it.
inline std::map<CellIndex, CellStat> oracle_cells(std::span<const CoverageMap> maps) {
  std::map<CellIndex, CellStat> out;
  for (const auto& m : maps) {
    for (int r = 0; r < m.order(); ++r) {
      for (int c = 0; c < m.order(); ++c) {
        const int q = m.at_local(r, c).level();
        if (q == 0) continue;
        auto& st = out[m.global_of(r, c)];
        st.best = std::max(st.best, q);
        ++st.count;
      }
    }
  }
  return out;
}

inline ScoreMetrics oracle_score(const CoverageMap& own, std::span<const CoverageMap> neighbors) {
  const auto cells = oracle_cells(neighbors);
  ScoreMetrics m;
  for (int r = 0; r < own.order(); ++r) {
    for (int c = 0; c < own.order(); ++c) {
      const int q = own.at_local(r, c).level();
      if (q == 0) continue;
      auto it = cells.find(own.global_of(r, c));
      const int best = it == cells.end() ? 0 : it->second.best;
      const int count = it == cells.end() ? 0 : it->second.count;
      if (best == 0) {
        m.d_new += q;
        ++m.cells_new;
      } else if (best < q) {
        m.d_boost += q - best;
        ++m.cells_boosted;
      } else {
        ++m.cells_saturated;
      }
      m.d_sat += count;
    }
  }
  return m;
}

/// Random sparse map centered somewhere in a small neighborhood, so that
/// windows overlap often.
inline CoverageMap random_map(Rng& rng, int order, double cell_size, double spread, double fill) {
  const GeoCoord center{rng.uniform(300.0, 300.0 + spread), rng.uniform(300.0, 300.0 + spread)};
  CoverageMap m(order, center, cell_size);
  for (int r = 0; r < order; ++r) {
    for (int c = 0; c < order; ++c) {
      if (!rng.bernoulli(fill)) continue;
      m.set_local(r, c, SignalQuality::of(static_cast<int>(rng.below(6))));
    }
  }
  return m;
}

inline GeoCoord center_of_cell(int i, int j, double cell = 30.0) { return cell_center(CellIndex{i, j}, cell); }

inline void put(CoverageMap& m, int i, int j, int level) {
  record_observation(m, CellIndex{i, j}, SignalQuality::of(level));
}

/// Two-step activation story on order-11 maps.
///
/// R is an RSU that covers its whole window at level 4. A parks ten columns to
/// the east: 93 covered cells, 7 of them in the column it shares with R (so
/// they add nothing) and 86 new ones. C then parks halfway between them with
/// 93 cells: 10 that neither RSU reaches, 25 it hears better than R does and
/// 58 that are already served at least as well.
struct NarrativeFixture {
  CoverageMap rsu{11, center_of_cell(20, 20), 30.0};
  CoverageMap car_a{11, center_of_cell(20, 30), 30.0};
  CoverageMap car_c{11, center_of_cell(20, 25), 30.0};

  NarrativeFixture() {
    for (int i = 15; i <= 25; ++i)
      for (int j = 15; j <= 25; ++j) put(rsu, i, j, 4);

    for (int i = 15; i <= 21; ++i) put(car_a, i, 25, 3);
    int placed = 0;
    for (int i = 15; i <= 25 && placed < 86; ++i)
      for (int j = 26; j <= 35 && placed < 86; ++j, ++placed) put(car_a, i, j, 3);

    // New: the corner of A's window A never heard.
    for (int i = 24; i <= 25; ++i)
      for (int j = 26; j <= 30; ++j) put(car_c, i, j, 3);
    // Inside R's window only: 25 improved, 30 redundant.
    int k = 0;
    for (int i = 15; i <= 25; ++i)
      for (int j = 20; j <= 24; ++j, ++k) put(car_c, i, j, k < 25 ? 5 : 2);
    // Heard by A at the same level.
    int left = 28;
    for (int i = 15; i <= 22 && left > 0; ++i)
      for (int j = 26; j <= 30 && left > 0; ++j, --left) put(car_c, i, j, 3);
  }
};

}  // namespace curbnet::testing
