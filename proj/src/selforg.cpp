#include "curbnet/selforg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "curbnet/errors.hpp"

namespace curbnet {

void DecisionWeights::validate() const {
  for (double w : {kappa, lambda, mu}) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("decision weights must be finite and non-negative");
  }
  if (kappa == 0.0 && lambda == 0.0 && mu == 0.0) throw ConfigError("decision weights are all zero");
}

LocalMaps::LocalMaps(CellRect extent, double cell_size) : extent_(extent), cell_size_(cell_size) {
  const auto n = static_cast<std::size_t>(extent_.rows()) * static_cast<std::size_t>(extent_.cols());
  lmc_.assign(n, 0);
  lms_.assign(n, 0);
}

std::size_t LocalMaps::offset(CellIndex c) const {
  return static_cast<std::size_t>(c.i - extent_.i0) * static_cast<std::size_t>(extent_.cols()) +
         static_cast<std::size_t>(c.j - extent_.j0);
}

int LocalMaps::coverage(CellIndex c) const { return extent_.contains(c) ? lmc_[offset(c)] : 0; }

int LocalMaps::saturation(CellIndex c) const {
  return extent_.contains(c) ? static_cast<int>(lms_[offset(c)]) : 0;
}

void LocalMaps::merge(const CoverageMap& scm) {
  const int n = scm.order();
  auto levels = scm.levels();
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const std::uint8_t v = levels[static_cast<std::size_t>(row) * n + col];
      if (v == 0) continue;
      const std::size_t off = offset(scm.global_of(row, col));
      if (v > lmc_[off]) lmc_[off] = v;
      ++lms_[off];
    }
  }
}

LocalMaps build_local_maps(std::span<const CoverageMap> neighbors) {
  if (neighbors.empty()) return LocalMaps{};
  CellRect extent;
  const double cell_size = neighbors.front().cell_size();
  for (const auto& m : neighbors) {
    if (m.cell_size() != cell_size) {
      throw InputError(fmt::format("neighbor maps use different cell sizes ({} vs {})", m.cell_size(), cell_size));
    }
    extent = extent.united(m.extent());
  }
  LocalMaps local(extent, cell_size);
  for (const auto& m : neighbors) local.merge(m);
  return local;
}

ScoreMetrics score_metrics(const CoverageMap& own, const LocalMaps& local) {
  if (!local.empty() && local.cell_size() != own.cell_size()) {
    throw InputError("own map and local maps use different cell sizes");
  }
  ScoreMetrics out;
  const int n = own.order();
  auto levels = own.levels();
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const int v = levels[static_cast<std::size_t>(row) * n + col];
      if (v == 0) continue;
      const CellIndex c = own.global_of(row, col);
      const int best = local.coverage(c);
      if (best == 0) {
        out.d_new += v;
        ++out.cells_new;
      } else if (best < v) {
        out.d_boost += v - best;
        ++out.cells_boosted;
      } else {
        ++out.cells_saturated;
      }
      out.d_sat += local.saturation(c);
    }
  }
  return out;
}

double decision_score(const ScoreMetrics& m, const DecisionWeights& w) {
  return w.kappa * static_cast<double>(m.d_new) + w.lambda * static_cast<double>(m.d_boost) -
         w.mu * static_cast<double>(m.d_sat);
}

std::string_view to_string(NodeMode mode) {
  switch (mode) {
    case NodeMode::kMoving: return "moving";
    case NodeMode::kListening: return "listening";
    case NodeMode::kActiveRsu: return "active_rsu";
    case NodeMode::kSleeping: return "sleeping";
    case NodeMode::kElectionCandidate: return "election_candidate";
  }
  return "unknown";
}

int DeltaCovRule::threshold(int nonzero_at_last_decision) const {
  if (cells) return std::max(1, *cells);
  return std::max(1, static_cast<int>(std::ceil(fraction * nonzero_at_last_decision)));
}

Decision decide(NodeState& node, std::span<const CoverageMap> neighbor_maps, const DecisionPolicy& p) {
  const LocalMaps local = build_local_maps(neighbor_maps);
  Decision d;
  d.metrics = score_metrics(node.scm, local);
  d.score = decision_score(d.metrics, p.weights);
  // A tie at the threshold sleeps.
  d.outcome = d.score > p.activation_threshold ? NodeMode::kActiveRsu : NodeMode::kSleeping;
  node.mode = d.outcome;
  node.last_decision_score = d.score;
  node.delta_cov = 0;
  node.nonzero_at_last_decision = node.scm.nonzero_count();
  ++node.decisions;
  return d;
}

bool accumulate_map_change(NodeState& node, int changed_cells, const DeltaCovRule& rule) {
  node.delta_cov += std::max(0, changed_cells);
  return node.delta_cov >= rule.threshold(node.nonzero_at_last_decision);
}

}  // namespace curbnet
