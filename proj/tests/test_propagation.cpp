#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "curbnet/errors.hpp"
#include "curbnet/propagation.hpp"
#include "curbnet/random.hpp"

using namespace curbnet;

namespace {

struct Box {
  double x0, y0, x1, y1;
};

std::vector<GeoCoord> ring_of(const Box& b) { return {{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1}, {b.x0, b.y1}}; }

// Liang-Barsky clip of the open segment against a closed box.
bool segment_hits_box(GeoCoord a, GeoCoord b, const Box& box) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - box.x0, box.x1 - a.x, a.y - box.y0, box.y1 - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double r = q[k] / p[k];
    if (p[k] < 0.0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
    if (t0 > t1) return false;
  }
  // Open segment: the clipped interval must reach past the endpoints.
  return t1 > 0.0 && t0 < 1.0;
}

}  // namespace

TEST_CASE("quality table lookups") {
  const QualityTable qt;
  CHECK(quality_for(0.0, true, qt).level() == 5);
  CHECK(quality_for(70.0, true, qt).level() == 5);
  CHECK(quality_for(70.01, true, qt).level() == 4);
  CHECK(quality_for(155.0, true, qt).level() == 2);
  CHECK(quality_for(155.01, true, qt).level() == 0);
  CHECK(quality_for(58.0, false, qt).level() == 5);
  CHECK(quality_for(64.0, false, qt).level() == 4);
  CHECK(quality_for(100.0, false, qt).level() == 3);
  CHECK(quality_for(130.0, false, qt).level() == 2);
  CHECK(quality_for(131.0, false, qt).level() == 0);
  CHECK(qt.max_range() == 155.0);

  // Level 1 never appears.
  for (double d = 0.0; d < 200.0; d += 0.5) {
    CHECK(quality_for(d, true, qt).level() != 1);
    CHECK(quality_for(d, false, qt).level() != 1);
  }
}

TEST_CASE("quality table validation") {
  QualityTable qt;
  CHECK_NOTHROW(qt.validate());
  qt.los = {70, 60, 135, 155};
  CHECK_THROWS_AS(qt.validate(), ConfigError);
  qt = QualityTable{};
  qt.nlos = {80, 90, 105, 130};  // level 5 NLOS beyond LOS
  CHECK_THROWS_AS(qt.validate(), ConfigError);
}

TEST_CASE("line of sight around a single building") {
  const ObstructionSet obs({ring_of({10, 10, 20, 20})});
  CHECK(has_los({0, 0}, {0, 30}, obs));
  CHECK_FALSE(has_los({0, 15}, {30, 15}, obs));
  CHECK_FALSE(has_los({0, 10}, {30, 10}, obs));  // grazing an edge blocks
  CHECK_FALSE(has_los({0, 0}, {30, 30}, obs));   // through two corners
  CHECK(has_los({0, 9.99}, {30, 9.99}, obs));
  CHECK(has_los({5, 5}, {5, 5}, obs));
}

TEST_CASE("classify uses the NLOS column when blocked") {
  const QualityTable qt;
  const ObstructionSet obs({ring_of({40, -5, 50, 5})});
  CHECK(classify({0, 0}, {100, 0}, obs, qt).level() == 3);  // NLOS 100 m
  CHECK(classify({0, 0}, {0, 100}, obs, qt).level() == 4);  // LOS 100 m
}

TEST_CASE("has_los matches box clipping on random scenes") {
  Rng rng(1234);
  int blocked = 0, checked = 0;
  for (int scene = 0; scene < 40; ++scene) {
    std::vector<Box> boxes;
    std::vector<std::vector<GeoCoord>> rings;
    for (int k = 0; k < 6; ++k) {
      const double x = rng.uniform(0, 400), y = rng.uniform(0, 400);
      boxes.push_back({x, y, x + rng.uniform(10, 80), y + rng.uniform(10, 80)});
      rings.push_back(ring_of(boxes.back()));
    }
    const ObstructionSet obs(rings);
    for (int n = 0; n < 200; ++n) {
      const GeoCoord a{rng.uniform(0, 500), rng.uniform(0, 500)};
      const GeoCoord b{rng.uniform(0, 500), rng.uniform(0, 500)};
      bool expect = true;
      for (const auto& box : boxes) expect = expect && !segment_hits_box(a, b, box);
      CHECK(has_los(a, b, obs) == expect);
      blocked += expect ? 0 : 1;
      ++checked;
    }
  }
  // Both outcomes were exercised.
  CHECK(blocked > checked / 10);
  CHECK(blocked < checked);
}

TEST_CASE("obstruction parsing") {
  const auto obs = parse_obstructions("[[[0,0],[10,0],[10,10],[0,10],[0,0]]]");
  REQUIRE(obs.polygons().size() == 1);
  CHECK(obs.polygons()[0].ring.size() == 4);  // closing vertex dropped
  CHECK(obs.covers({5, 5}));
  CHECK(obs.covers({10, 5}));
  CHECK_FALSE(obs.covers({11, 5}));

  const auto wrapped = parse_obstructions(R"({"polygons": [[[0,0],[10,0],[10,10]]]})");
  CHECK(wrapped.polygons().size() == 1);
  CHECK(parse_obstructions(obstructions_to_json(wrapped)).polygons()[0].ring == wrapped.polygons()[0].ring);

  CHECK_THROWS_AS(parse_obstructions("[[[0,0],[1,1]]]"), FormatError);
  CHECK_THROWS_AS(parse_obstructions("not json"), FormatError);
  CHECK_THROWS_AS(parse_obstructions("[[[0,0],[1,\"a\"],[2,2]]]"), FormatError);
}
