#pragma once

// Greedy per-vehicle RSU decision.
//
// A parked car overlays its own coverage map on two maps merged from its
// one-hop active neighbors: the best level seen per cell (coverage) and the
// number of neighbors covering the cell (saturation). Each own covered cell is
// then new coverage, an improvement, or redundant; the weighted sum of those
// effects decides whether the car becomes an RSU.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "curbnet/geo_grid.hpp"

namespace curbnet {

using VehicleId = std::uint32_t;

/// Coefficients of new coverage, improved coverage and saturation.
struct DecisionWeights {
  double kappa = 1.0;
  double lambda = 1.0;
  double mu = 1.0;

  /// Throws ConfigError on negative or all-zero weights.
  void validate() const;

  /// Favours signal quality: cheap saturation.
  static DecisionWeights set1() { return {1.0, 1.0, 0.1}; }
  /// Favours fewer active cars.
  static DecisionWeights set2() { return {1.0, 8.0, 1.0}; }

  friend bool operator==(const DecisionWeights&, const DecisionWeights&) = default;
};

/// Best coverage and RSU count per cell over a neighborhood.
class LocalMaps {
 public:
  LocalMaps() = default;
  LocalMaps(CellRect extent, double cell_size);

  const CellRect& extent() const { return extent_; }
  double cell_size() const { return cell_size_; }
  bool empty() const { return extent_.empty(); }

  /// Zero outside the extent.
  int coverage(CellIndex c) const;
  int saturation(CellIndex c) const;

  void merge(const CoverageMap& scm);

 private:
  std::size_t offset(CellIndex c) const;

  CellRect extent_;
  double cell_size_ = 0.0;
  std::vector<std::uint8_t> lmc_;
  std::vector<std::uint32_t> lms_;
};

/// Throws InputError when the maps disagree on cell size.
LocalMaps build_local_maps(std::span<const CoverageMap> neighbors);

/// Score terms plus how many own cells fell in each category. A cell already
/// covered at an equal or better level counts as saturated.
struct ScoreMetrics {
  std::int64_t d_new = 0;
  std::int64_t d_boost = 0;
  std::int64_t d_sat = 0;
  int cells_new = 0;
  int cells_boosted = 0;
  int cells_saturated = 0;

  friend bool operator==(const ScoreMetrics&, const ScoreMetrics&) = default;
};

/// Throws InputError when `own` and `local` disagree on cell size.
ScoreMetrics score_metrics(const CoverageMap& own, const LocalMaps& local);

double decision_score(const ScoreMetrics& m, const DecisionWeights& w);

enum class NodeMode { kMoving, kListening, kActiveRsu, kSleeping, kElectionCandidate };

std::string_view to_string(NodeMode mode);

/// Re-decision trigger: a fixed cell count, or a fraction of the cells that
/// were covered at the previous decision (at least one cell).
struct DeltaCovRule {
  std::optional<int> cells;
  double fraction = 0.10;

  int threshold(int nonzero_at_last_decision) const;
};

struct DecisionPolicy {
  DecisionWeights weights;
  double activation_threshold = 0.0;
  DeltaCovRule delta_cov;
};

struct NodeState {
  VehicleId id = 0;
  NodeMode mode = NodeMode::kListening;
  CoverageMap scm{1, GeoCoord{}, 30.0};
  int delta_cov = 0;
  double last_decision_score = 0.0;
  int nonzero_at_last_decision = 0;
  int decisions = 0;
};

struct Decision {
  NodeMode outcome = NodeMode::kSleeping;
  ScoreMetrics metrics;
  double score = 0.0;
};

/// Scores `node` against its neighbors' maps and moves it to ActiveRsu when
/// the score is strictly above the activation threshold, Sleeping otherwise.
/// Resets the change counter.
Decision decide(NodeState& node, std::span<const CoverageMap> neighbor_maps, const DecisionPolicy& p);

/// Adds changed cells to the node's counter; true once the counter reaches
/// the re-decision threshold.
bool accumulate_map_change(NodeState& node, int changed_cells, const DeltaCovRule& rule);

/// Accumulates `changed_cells` and re-runs decide() when the threshold is
/// crossed. `fetch_neighbors` is only called in that case and must return the
/// current one-hop neighbor maps.
template <class FetchNeighbors>
std::optional<Decision> on_map_update(NodeState& node, int changed_cells, FetchNeighbors&& fetch_neighbors,
                                      const DecisionPolicy& p) {
  if (!accumulate_map_change(node, changed_cells, p.delta_cov)) return std::nullopt;
  const std::vector<CoverageMap> maps = fetch_neighbors();
  return decide(node, maps, p);
}

}  // namespace curbnet
