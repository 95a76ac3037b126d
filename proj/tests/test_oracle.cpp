#include <doctest.h>

#include <cstdint>
#include <tuple>

#include "curbnet/errors.hpp"
#include "curbnet/oracle.hpp"
#include "support.hpp"

using namespace curbnet;

namespace {

struct Direct {
  std::int64_t sum_best = 0;
  std::int64_t sum_sat = 0;
  int count = 0;
  int domain = 0;
};

// Everything recomputed from the maps of the chosen subset.
Direct direct(const std::vector<CoverageMap>& maps, std::uint64_t mask) {
  Direct d;
  d.domain = static_cast<int>(curbnet::testing::oracle_cells(maps).size());
  std::vector<CoverageMap> chosen;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if ((mask >> k) & 1U) chosen.push_back(maps[k]);
  }
  d.count = static_cast<int>(chosen.size());
  for (const auto& [cell, st] : curbnet::testing::oracle_cells(chosen)) {
    d.sum_best += st.best;
    d.sum_sat += st.count;
  }
  return d;
}

std::uint64_t naive_lexicographic(const std::vector<CoverageMap>& maps, double eps) {
  const std::uint64_t all = (std::uint64_t{1} << maps.size()) - 1;
  const Direct full = direct(maps, all);
  const double need = static_cast<double>(full.sum_best) - eps * full.domain - 1e-9;
  std::uint64_t best = 0;
  std::tuple<bool, int, std::int64_t> best_key{true, 0, 0};
  for (std::uint64_t m = 0; m <= all; ++m) {
    const Direct d = direct(maps, m);
    const std::tuple<bool, int, std::int64_t> key{static_cast<double>(d.sum_best) < need, d.count, d.sum_sat};
    if (m == 0 || key < best_key) {
      best_key = key;
      best = m;
    }
  }
  return best;
}

std::vector<CoverageMap> random_pool(Rng& rng, int n) {
  std::vector<CoverageMap> maps;
  for (int k = 0; k < n; ++k) maps.push_back(curbnet::testing::random_map(rng, 5, 30.0, 120.0, 0.5));
  return maps;
}

}  // namespace

TEST_CASE("subset metrics over all masks") {
  Rng rng(42);
  const auto maps = random_pool(rng, 8);
  const CandidatePool pool(maps);
  const int domain = static_cast<int>(curbnet::testing::oracle_cells(maps).size());
  CHECK(pool.domain_size() == domain);
  for (std::uint64_t m = 0; m < 256; ++m) {
    const Direct d = direct(maps, m);
    const NetworkMetrics got = evaluate_subset(pool, m);
    CHECK(got.rsu_count == d.count);
    CHECK(got.domain_cells == domain);
    CHECK(got.mean_signal == doctest::Approx(static_cast<double>(d.sum_best) / domain));
    CHECK(got.mean_saturation == doctest::Approx(static_cast<double>(d.sum_sat) / domain));
    std::vector<bool> flags(8);
    for (int k = 0; k < 8; ++k) flags[static_cast<std::size_t>(k)] = (m >> k) & 1U;
    CHECK(evaluate_subset(maps, flags) == got);
    CHECK(mask_of(flags) == m);
  }
  CHECK_THROWS_AS(evaluate_subset(maps, std::vector<bool>(3)), InputError);
}

TEST_CASE("an empty pool") {
  const OptimalResult r = brute_force_optimal({});
  CHECK(r.mask == 0);
  CHECK(r.metrics.domain_cells == 0);
  CHECK(r.evaluated == 1);
}

TEST_CASE("exhaustive search agrees with naive enumeration") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(9));
    auto maps = random_pool(rng, n);
    if (trial % 3 == 0 && n > 1) maps[1] = maps[0];  // exact duplicates tie on everything but the mask
    const double eps = trial % 2 ? 0.0 : 0.05;
    const OptimalResult r = brute_force_optimal(maps, Objective::lexicographic(eps));
    CHECK(r.mask == naive_lexicographic(maps, eps));
    CHECK(r.evaluated == (std::uint64_t{1} << n));
    CHECK(r.metrics == evaluate_subset(CandidatePool(maps), r.mask));
  }
}

TEST_CASE("threads do not change the answer") {
  Rng rng(11);
  const auto maps = random_pool(rng, 14);
  const OptimalResult one = brute_force_optimal(maps, Objective{}, 24, 1);
  const OptimalResult four = brute_force_optimal(maps, Objective{}, 24, 4);
  CHECK(one.mask == four.mask);
  CHECK(one.evaluated == four.evaluated);
}

TEST_CASE("the optimum is at least as good as any subset") {
  Rng rng(3);
  const auto maps = random_pool(rng, 9);
  const CandidatePool pool(maps);
  for (const Objective obj : {Objective::lexicographic(0.01), Objective::scalarized(0.05), Objective::scalarized(0.5)}) {
    const OptimalResult r = brute_force_optimal(maps, obj);
    const double all_signal = evaluate_subset(pool, (1U << 9) - 1).mean_signal;
    for (std::uint64_t m = 0; m < 512; ++m) {
      CHECK(objective_at_least(r.metrics, evaluate_subset(pool, m), obj, all_signal));
    }
  }
}

TEST_CASE("duplicated candidates are never both needed") {
  CoverageMap a(3, curbnet::testing::center_of_cell(10, 10), 30.0);
  for (int i = 9; i <= 11; ++i)
    for (int j = 9; j <= 11; ++j) curbnet::testing::put(a, i, j, 4);
  const std::vector<CoverageMap> maps{a, a, a};
  const OptimalResult r = brute_force_optimal(maps);
  CHECK(r.mask == 1);
  CHECK(r.metrics.mean_signal == 4.0);
  CHECK(r.metrics.mean_saturation == 1.0);
}

TEST_CASE("candidate cap") {
  Rng rng(1);
  const auto maps = random_pool(rng, 6);
  CHECK_THROWS_AS(brute_force_optimal(maps, Objective{}, 5), InputError);
  CHECK_NOTHROW(brute_force_optimal(maps, Objective{}, 6));
  const auto many = random_pool(rng, 41);
  CHECK_THROWS_AS(brute_force_optimal(many, Objective{}, 64), InputError);
}
