#include <doctest.h>

#include <cmath>
#include <limits>

#include "curbnet/errors.hpp"
#include "curbnet/geo_grid.hpp"
#include "curbnet/random.hpp"

using namespace curbnet;

TEST_CASE("cell_of uses floor division on both axes") {
  CHECK(cell_of({29.9, 29.9}, 30.0) == CellIndex{0, 0});
  CHECK(cell_of({30.0, 30.0}, 30.0) == CellIndex{1, 1});
  CHECK(cell_of({95.0, 10.0}, 30.0) == CellIndex{0, 3});  // row follows y
  CHECK(cell_of({-0.1, -30.0}, 30.0) == CellIndex{-1, -1});

  Rng rng(3);
  for (int n = 0; n < 2000; ++n) {
    const double size = rng.uniform(1.0, 50.0);
    const GeoCoord p{rng.uniform(-500.0, 5000.0), rng.uniform(-500.0, 5000.0)};
    const CellIndex c = cell_of(p, size);
    CHECK(c.j == static_cast<std::int32_t>(std::floor(p.x / size)));
    CHECK(c.i == static_cast<std::int32_t>(std::floor(p.y / size)));
  }
}

TEST_CASE("cell_of rejects bad input") {
  CHECK_THROWS_AS(cell_of({std::nan(""), 0.0}, 30.0), InputError);
  CHECK_THROWS_AS(cell_of({0.0, std::numeric_limits<double>::infinity()}, 30.0), InputError);
  CHECK_THROWS_AS(cell_of({0.0, 0.0}, 0.0), InputError);
}

TEST_CASE("cell_center is inside its cell") {
  for (int i = -3; i < 4; ++i)
    for (int j = -3; j < 4; ++j) CHECK(cell_of(cell_center({i, j}, 30.0), 30.0) == CellIndex{i, j});
}

TEST_CASE("signal quality range") {
  CHECK(SignalQuality::of(0).level() == 0);
  CHECK_FALSE(SignalQuality::of(0).covered());
  CHECK(SignalQuality::of(5).covered());
  CHECK_THROWS_AS(SignalQuality::of(6), InputError);
  CHECK_THROWS_AS(SignalQuality::of(-1), InputError);
}

TEST_CASE("coverage map window and observations") {
  CoverageMap m(11, {315.0, 615.0}, 30.0);  // center cell (20, 10)
  CHECK(m.anchor() == CellIndex{20, 10});
  CHECK(m.extent() == CellRect{15, 5, 25, 15});
  CHECK(m.empty());

  CHECK(record_observation(m, {20, 10}, SignalQuality::of(3)) == ObservationResult::kImproved);
  CHECK(record_observation(m, {20, 10}, SignalQuality::of(2)) == ObservationResult::kUnchanged);
  CHECK(record_observation(m, {20, 10}, SignalQuality::of(3)) == ObservationResult::kUnchanged);
  CHECK(record_observation(m, {20, 10}, SignalQuality::of(5)) == ObservationResult::kImproved);
  CHECK(m.at({20, 10})->level() == 5);
  CHECK(m.at_local(5, 5).level() == 5);

  CHECK(record_observation(m, {26, 10}, SignalQuality::of(4)) == ObservationResult::kOutsideWindow);
  CHECK_FALSE(m.at({26, 10}).has_value());
  CHECK(m.nonzero_count() == 1);
}

TEST_CASE("coverage map construction errors") {
  CHECK_THROWS_AS(CoverageMap(10, {0, 0}, 30.0), InputError);
  CHECK_THROWS_AS(CoverageMap(0, {0, 0}, 30.0), InputError);
  CHECK_THROWS_AS(CoverageMap(3, {std::nan(""), 0}, 30.0), InputError);
  CHECK_THROWS_AS(CoverageMap(3, {0, 0}, -1.0), InputError);
}

TEST_CASE("codec sizes") {
  CHECK(encoded_payload_size(11) == 46);
  CHECK(encoded_size(11) == 50);
  CHECK(encoded_payload_size(1) == 1);
  CHECK(encoded_payload_size(3) == 4);  // 27 bits
}

TEST_CASE("codec layout of a single cell") {
  CoverageMap m(1, {1000.0, 2003.0}, 30.0);
  m.set_local(0, 0, SignalQuality::of(5));
  const auto bytes = encode(m);
  REQUIRE(bytes.size() == 5);
  CHECK(bytes[0] == 0xA0);  // 101 then zero padding
  // 1000 / 5 = 200, 2003 / 5 -> 400 (floored)
  CHECK(bytes[1] == 0x00);
  CHECK(bytes[2] == 200);
  CHECK(bytes[3] == 0x01);
  CHECK(bytes[4] == 0x90);
}

TEST_CASE("codec bit packing spans byte boundaries") {
  CoverageMap m(3, {100.0, 100.0}, 30.0);
  const int lv[9] = {1, 2, 3, 4, 5, 0, 5, 4, 3};
  for (int k = 0; k < 9; ++k) m.set_local(k / 3, k % 3, SignalQuality::of(lv[k]));
  const auto bytes = encode(m);
  // 001 010 011 100 101 000 101 100 011 + 5 pad bits
  CHECK(bytes[0] == 0b00101001);
  CHECK(bytes[1] == 0b11001010);
  CHECK(bytes[2] == 0b00101100);
  CHECK(bytes[3] == 0b01100000);
}

TEST_CASE("codec round trip") {
  Rng rng(77);
  for (int n = 0; n < 300; ++n) {
    const int order = 2 * static_cast<int>(rng.below(8)) + 1;
    // Centers on the 5 m lattice survive quantization exactly.
    const GeoCoord c{5.0 * static_cast<double>(rng.below(4000)), 5.0 * static_cast<double>(rng.below(4000))};
    CoverageMap m(order, c, 30.0);
    for (int r = 0; r < order; ++r)
      for (int k = 0; k < order; ++k) m.set_local(r, k, SignalQuality::of(static_cast<int>(rng.below(6))));
    const auto bytes = encode(m);
    CHECK(bytes.size() == encoded_size(order));
    CHECK(decode(bytes, order, 30.0) == m);
  }
}

TEST_CASE("decode quantizes the center down") {
  CoverageMap m(3, {123.4, 57.9}, 30.0);
  const CoverageMap d = decode(encode(m), 3, 30.0);
  CHECK(d.center() == GeoCoord{120.0, 55.0});
}

TEST_CASE("codec errors") {
  CoverageMap m(3, {100.0, 100.0}, 30.0);
  auto bytes = encode(m);
  CHECK_THROWS_AS(decode(std::span(bytes).first(bytes.size() - 1), 3), FormatError);
  CHECK_THROWS_AS(decode(bytes, 5), FormatError);

  auto bad_level = bytes;
  bad_level[0] = 0xE0;  // 111
  CHECK_THROWS_AS(decode(bad_level, 3), FormatError);

  auto bad_pad = bytes;
  bad_pad[3] |= 0x01;
  CHECK_THROWS_AS(decode(bad_pad, 3), FormatError);

  CHECK_THROWS_AS(encode(CoverageMap(3, {-10.0, 0.0}, 30.0)), InputError);
  CHECK_THROWS_AS(encode(CoverageMap(3, {0.0, 65536.0 * 5.0}, 30.0)), InputError);
}
