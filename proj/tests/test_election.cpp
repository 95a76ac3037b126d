#include <doctest.h>

#include <cmath>
#include <set>

#include "curbnet/election.hpp"
#include "curbnet/errors.hpp"
#include "curbnet/random.hpp"

using namespace curbnet;

TEST_CASE("next wake instant") {
  const WakeSchedule s{15.0, 0.050};
  CHECK(next_wake(31.0, s) == 45.0);
  CHECK(next_wake(45.0, s) == 45.0);
  CHECK(next_wake(0.0, s) == 0.0);
  CHECK(next_wake(45.0000000001, s) == 45.0);
  CHECK(next_wake(45.01, s) == 60.0);
  for (double t = 0.0; t < 200.0; t += 0.37) {
    const double w = next_wake(t, s);
    CHECK(w >= t - 1e-6);
    CHECK(w - t < 15.0);
    CHECK(std::fmod(w, 15.0) == 0.0);
  }
}

TEST_CASE("duty cycle") {
  CHECK(100.0 * duty_cycle({15.0, 0.050}) == doctest::Approx(0.3333).epsilon(1e-3));
  CHECK_THROWS_AS(duty_cycle({0.01, 0.050}), ConfigError);
  CHECK_THROWS_AS(WakeSchedule({15.0, 0.0}).validate(), ConfigError);
}

TEST_CASE("backoff arithmetic") {
  CHECK(backoff_time(0.0, 1.0, 40, 0.050) == doctest::Approx(2.0));
  CHECK(backoff_time(1.0, 1.0, 40, 0.050) == 0.0);
  CHECK(backoff_time(7.0, 5.0, 40, 0.050) == 0.0);  // clamped
  CHECK(backoff_time(-3.0, 5.0, 40, 0.050) == doctest::Approx(2.0));
  CHECK_THROWS_AS(backoff_time(1.0, 0.0, 40, 0.050), ConfigError);
  CHECK_THROWS_AS(backoff_time(1.0, 1.0, 0, 0.050), ConfigError);

  Rng rng(8);
  const BackoffParams p{250.0, 40, 0.050};
  for (int n = 0; n < 1000; ++n) {
    const double d = rng.uniform(0.0, 250.0);
    const int expect = static_cast<int>(std::floor((250.0 - d) / 250.0 * 40.0 + 1e-12));
    const int got = backoff_slot(d, p);
    // The two forms can differ only when the ratio lands on a slot edge.
    CHECK(std::abs(got - expect) <= 1);
    CHECK(got == static_cast<int>(std::floor((1.0 - d / 250.0) * 40.0)));
  }
}

TEST_CASE("higher scores never back off longer") {
  const BackoffParams p{100.0, 40, 0.050};
  Rng rng(2);
  for (int n = 0; n < 1000; ++n) {
    const double a = rng.uniform(-10, 110), b = rng.uniform(-10, 110);
    if (a > b) CHECK(backoff_slot(a, p) <= backoff_slot(b, p));
  }
}

TEST_CASE("election outcomes") {
  const BackoffParams p{100.0, 40, 0.050};
  SUBCASE("no candidates") {
    const auto o = run_election({}, p, 1);
    CHECK_FALSE(o.winner.has_value());
    CHECK(o.suppressed.empty());
  }
  SUBCASE("single candidate waits its own backoff") {
    const std::vector<ElectionCandidate> c{{7, 50.0}};
    const auto o = run_election(c, p, 1);
    CHECK(o.winner == 7u);
    CHECK(o.winning_slot == 20);
    CHECK(o.winner_delay == doctest::Approx(1.0));
    CHECK(o.suppressed.empty());
  }
  SUBCASE("best score fires at once") {
    const std::vector<ElectionCandidate> c{{1, 50.0}, {2, 100.0}, {3, 0.0}};
    const auto o = run_election(c, p, 1);
    CHECK(o.winner == 2u);
    CHECK(o.winner_delay == 0.0);
    CHECK(o.suppressed == std::vector<VehicleId>{1, 3});
  }
  SUBCASE("ties are broken by the seed") {
    const std::vector<ElectionCandidate> c{{4, 61.0}, {5, 61.5}, {6, 10.0}};  // both in slot 15
    std::set<VehicleId> winners;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
      const auto o = run_election(c, p, seed);
      REQUIRE(o.winner.has_value());
      CHECK(o.tied == std::vector<VehicleId>{4, 5});
      CHECK(o.suppressed.size() == 2);
      CHECK(run_election(c, p, seed).winner == o.winner);
      winners.insert(*o.winner);
    }
    CHECK(winners == std::set<VehicleId>{4, 5});
  }
}

TEST_CASE("forty slots exclude nearly every candidate") {
  const BackoffParams p{1.0, 40, 0.050};
  Rng rng(31);
  double excluded = 0.0;
  const int trials = 200, n = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<ElectionCandidate> c;
    for (int k = 0; k < n; ++k) c.push_back({static_cast<VehicleId>(k), rng.uniform()});
    const auto o = run_election(c, p, static_cast<std::uint64_t>(t));
    REQUIRE(o.winner.has_value());
    int in_slot = 0;
    for (const auto& x : c) in_slot += backoff_slot(x.d_score, p) == o.winning_slot ? 1 : 0;
    excluded += 1.0 - static_cast<double>(in_slot) / n;
  }
  CHECK(excluded / trials == doctest::Approx(0.975).epsilon(0.005));
}

TEST_CASE("beacon watch counts consecutive misses") {
  BeaconWatch w(3);
  CHECK(w.observe_window({1, 2}).empty());
  CHECK(w.tracks(1));
  CHECK(w.observe_window({2}).empty());
  CHECK(w.missed(1) == 1);
  CHECK(w.observe_window({1, 2}).empty());
  CHECK(w.missed(1) == 0);
  CHECK(w.observe_window({2}).empty());
  CHECK(w.observe_window({2}).empty());
  CHECK(w.observe_window({2}) == std::vector<VehicleId>{1});
  CHECK_FALSE(w.tracks(1));
  CHECK(w.tracks(2));
  w.forget(2);
  CHECK_FALSE(w.tracks(2));
}
