#pragma once

// Exhaustive RSU-subset search, used as the reference the greedy decisions
// are measured against.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curbnet/geo_grid.hpp"

namespace curbnet {

struct NetworkMetrics {
  double mean_signal = 0.0;      // best level per cell, averaged over the domain
  double mean_saturation = 0.0;  // active RSUs covering each cell, averaged over the domain
  int rsu_count = 0;
  int domain_cells = 0;  // cells any candidate covers

  friend bool operator==(const NetworkMetrics&, const NetworkMetrics&) = default;
};

/// Candidate maps flattened onto their common domain: the cells at least one
/// candidate covers. Means are taken over that domain whether or not the
/// covering candidate is active.
class CandidatePool {
 public:
  /// Throws InputError when maps disagree on cell size.
  explicit CandidatePool(std::span<const CoverageMap> maps);

  std::size_t size() const { return cells_.size(); }
  int domain_size() const { return domain_; }

  struct Cell {
    std::uint32_t slot;  // index into the domain
    std::uint8_t level;
  };
  std::span<const Cell> cells_of(std::size_t candidate) const { return cells_[candidate]; }

 private:
  int domain_ = 0;
  std::vector<std::vector<Cell>> cells_;
};

/// `active[k]` selects candidate k. Throws InputError on a length mismatch.
NetworkMetrics evaluate_subset(std::span<const CoverageMap> candidates, const std::vector<bool>& active);
NetworkMetrics evaluate_subset(const CandidatePool& pool, std::uint64_t mask);

struct Objective {
  enum class Kind { kLexicographic, kScalarized };
  Kind kind = Kind::kLexicographic;
  /// Lexicographic: keep subsets whose mean signal is within epsilon of the
  /// all-active signal, then fewest RSUs, then least saturation.
  double epsilon = 0.01;
  /// Scalarized: maximize mean_signal - alpha * rsu_count.
  double alpha = 0.05;

  static Objective lexicographic(double eps = 0.01) { return {Kind::kLexicographic, eps, 0.0}; }
  static Objective scalarized(double alpha) { return {Kind::kScalarized, 0.0, alpha}; }
};

struct OptimalResult {
  std::uint64_t mask = 0;
  NetworkMetrics metrics;
  std::uint64_t evaluated = 0;  // subsets visited
};

inline constexpr int kDefaultCandidateCap = 24;

/// Every subset is visited in Gray-code order with incremental per-cell
/// updates. Ties go to the lowest mask. Throws InputError when there are more
/// candidates than `cap` (or more than 40, regardless of cap).
OptimalResult brute_force_optimal(std::span<const CoverageMap> candidates, const Objective& objective = {},
                                  int cap = kDefaultCandidateCap, int threads = 1);

/// True when subset `a` is at least as good as `b` under the objective, given
/// the all-active mean signal for the lexicographic threshold.
bool objective_at_least(const NetworkMetrics& a, const NetworkMetrics& b, const Objective& objective,
                        double all_active_signal);

std::uint64_t mask_of(const std::vector<bool>& active);

}  // namespace curbnet
