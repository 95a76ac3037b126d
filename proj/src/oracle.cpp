#include "curbnet/oracle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "curbnet/errors.hpp"

namespace curbnet {

CandidatePool::CandidatePool(std::span<const CoverageMap> maps) {
  std::map<CellIndex, std::uint32_t> slot;
  cells_.resize(maps.size());
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& m = maps[k];
    if (m.cell_size() != maps.front().cell_size()) throw InputError("candidate maps use different cell sizes");
    const int n = m.order();
    auto levels = m.levels();
    for (int row = 0; row < n; ++row) {
      for (int col = 0; col < n; ++col) {
        const std::uint8_t v = levels[static_cast<std::size_t>(row) * n + col];
        if (v == 0) continue;
        auto [it, fresh] = slot.try_emplace(m.global_of(row, col), static_cast<std::uint32_t>(slot.size()));
        cells_[k].push_back({it->second, v});
      }
    }
  }
  domain_ = static_cast<int>(slot.size());
}

NetworkMetrics evaluate_subset(const CandidatePool& pool, std::uint64_t mask) {
  NetworkMetrics out;
  out.domain_cells = pool.domain_size();
  std::vector<std::uint8_t> best(static_cast<std::size_t>(pool.domain_size()), 0);
  std::int64_t sat = 0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (!((mask >> k) & 1U)) continue;
    ++out.rsu_count;
    for (const auto& c : pool.cells_of(k)) {
      best[c.slot] = std::max(best[c.slot], c.level);
      ++sat;
    }
  }
  if (out.domain_cells == 0) return out;
  std::int64_t sum = 0;
  for (auto b : best) sum += b;
  out.mean_signal = static_cast<double>(sum) / out.domain_cells;
  out.mean_saturation = static_cast<double>(sat) / out.domain_cells;
  return out;
}

std::uint64_t mask_of(const std::vector<bool>& active) {
  if (active.size() > 64) throw InputError("at most 64 candidates fit a mask");
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k]) m |= std::uint64_t{1} << k;
  }
  return m;
}

NetworkMetrics evaluate_subset(std::span<const CoverageMap> candidates, const std::vector<bool>& active) {
  if (active.size() != candidates.size()) {
    throw InputError(fmt::format("mask has {} entries for {} candidates", active.size(), candidates.size()));
  }
  return evaluate_subset(CandidatePool(candidates), mask_of(active));
}

namespace {

constexpr double kTol = 1e-9;

// Ranking key; smaller is better.
struct Key {
  bool feasible = false;  // lexicographic: within epsilon of all-active
  double value = 0.0;     // scalarized: negated objective; lexicographic: rsu count
  std::int64_t sat = 0;
  std::uint64_t mask = 0;
};

bool better(const Key& a, const Key& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (std::abs(a.value - b.value) > kTol) return a.value < b.value;
  if (a.sat != b.sat) return a.sat < b.sat;
  return a.mask < b.mask;
}

struct Enumerator {
  const CandidatePool& pool;
  const Objective& obj;
  double threshold_sum;  // lexicographic acceptance on the summed best levels

  std::vector<std::array<std::uint8_t, 6>> hist;
  std::vector<std::uint8_t> best;
  std::int64_t sum_best = 0;
  std::int64_t sum_sat = 0;
  int count = 0;
  std::uint64_t mask = 0;

  Enumerator(const CandidatePool& p, const Objective& o, double thr)
      : pool(p), obj(o), threshold_sum(thr), hist(static_cast<std::size_t>(p.domain_size())),
        best(static_cast<std::size_t>(p.domain_size()), 0) {
    for (auto& h : hist) h.fill(0);
  }

  void toggle(std::size_t k) {
    const bool adding = !((mask >> k) & 1U);
    mask ^= std::uint64_t{1} << k;
    const auto cells = pool.cells_of(k);
    if (adding) {
      ++count;
      sum_sat += static_cast<std::int64_t>(cells.size());
      for (const auto& c : cells) {
        ++hist[c.slot][c.level];
        if (c.level > best[c.slot]) {
          sum_best += c.level - best[c.slot];
          best[c.slot] = c.level;
        }
      }
    } else {
      --count;
      sum_sat -= static_cast<std::int64_t>(cells.size());
      for (const auto& c : cells) {
        auto& h = hist[c.slot];
        --h[c.level];
        if (c.level == best[c.slot] && h[c.level] == 0) {
          std::uint8_t b = c.level;
          while (b > 0 && h[b] == 0) --b;
          sum_best -= best[c.slot] - b;
          best[c.slot] = b;
        }
      }
    }
  }

  Key key() const {
    Key k;
    k.sat = sum_sat;
    k.mask = mask;
    if (obj.kind == Objective::Kind::kLexicographic) {
      k.feasible = static_cast<double>(sum_best) >= threshold_sum - kTol;
      k.value = count;
    } else {
      k.feasible = true;
      const double signal = pool.domain_size() ? static_cast<double>(sum_best) / pool.domain_size() : 0.0;
      k.value = -(signal - obj.alpha * count);
    }
    return k;
  }

  // All subsets whose top bits equal `prefix`, low `low_bits` bits enumerated
  // in Gray order.
  Key run(std::uint64_t prefix, int low_bits, std::uint64_t& visited) {
    const std::size_t n = pool.size();
    for (std::size_t k = static_cast<std::size_t>(low_bits); k < n; ++k) {
      if ((prefix >> (k - low_bits)) & 1U) toggle(k);
    }
    Key bestk = key();
    ++visited;
    const std::uint64_t steps = std::uint64_t{1} << low_bits;
    for (std::uint64_t i = 1; i < steps; ++i) {
      toggle(static_cast<std::size_t>(std::countr_zero(i)));
      const Key k = key();
      ++visited;
      if (better(k, bestk)) bestk = k;
    }
    return bestk;
  }
};

}  // namespace

bool objective_at_least(const NetworkMetrics& a, const NetworkMetrics& b, const Objective& obj,
                        double all_active_signal) {
  if (obj.kind == Objective::Kind::kScalarized) {
    return a.mean_signal - obj.alpha * a.rsu_count >= b.mean_signal - obj.alpha * b.rsu_count - kTol;
  }
  const bool fa = a.mean_signal >= all_active_signal - obj.epsilon - kTol;
  const bool fb = b.mean_signal >= all_active_signal - obj.epsilon - kTol;
  if (fa != fb) return fa;
  if (!fa) return a.mean_signal >= b.mean_signal - kTol;
  if (a.rsu_count != b.rsu_count) return a.rsu_count < b.rsu_count;
  return a.mean_saturation <= b.mean_saturation + kTol;
}

OptimalResult brute_force_optimal(std::span<const CoverageMap> candidates, const Objective& objective, int cap,
                                  int threads) {
  const int n = static_cast<int>(candidates.size());
  if (n > cap || n > 40) {
    throw InputError(fmt::format(
        "{} candidates exceed the brute-force cap of {} (2^{} subsets); raise the cap explicitly if you really "
        "want an exponential run",
        n, std::min(cap, 40), n));
  }
  const CandidatePool pool(candidates);
  const std::uint64_t all = n == 0 ? 0 : (std::uint64_t{1} << n) - 1;
  const NetworkMetrics all_active = evaluate_subset(pool, all);
  const double threshold_sum = (all_active.mean_signal - objective.epsilon) * pool.domain_size();

  // Split on the top bits so each worker owns whole Gray sequences.
  const int workers = std::max(1, threads);
  int top_bits = 0;
  while (top_bits < n && top_bits < 8 && (1 << top_bits) < workers * 4) ++top_bits;
  const int low_bits = n - top_bits;
  const std::uint64_t prefixes = std::uint64_t{1} << top_bits;

  std::vector<Key> best(prefixes);
  std::vector<std::uint64_t> visited(prefixes, 0);
  auto work = [&](std::uint64_t first, std::uint64_t stride) {
    for (std::uint64_t p = first; p < prefixes; p += stride) {
      Enumerator e(pool, objective, threshold_sum);
      best[p] = e.run(p, low_bits, visited[p]);
    }
  };
  if (workers == 1 || prefixes == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool_threads;
    for (int w = 0; w < workers; ++w) pool_threads.emplace_back(work, static_cast<std::uint64_t>(w), workers);
    for (auto& t : pool_threads) t.join();
  }

  // Fixed merge order keeps the result independent of scheduling.
  Key winner = best[0];
  for (std::uint64_t p = 1; p < prefixes; ++p) {
    if (better(best[p], winner)) winner = best[p];
  }
  OptimalResult out;
  out.mask = winner.mask;
  out.metrics = evaluate_subset(pool, winner.mask);
  for (auto v : visited) out.evaluated += v;
  return out;
}

}  // namespace curbnet
