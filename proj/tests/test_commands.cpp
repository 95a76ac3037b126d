#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "curbnet/battery.hpp"
#include "curbnet/commands.hpp"
#include "curbnet/errors.hpp"
#include "curbnet/scenario.hpp"

using namespace curbnet;
namespace fs = std::filesystem;

namespace {

const fs::path kCity = fs::path(CURBNET_FIXTURES) / "small_city" / "city.cfg";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("curbnet_cmd_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("battery drain") {
  CHECK(battery_drain(3, 12, 6.64, 60, 1.0) == doctest::Approx(2.7667).epsilon(1e-4));
  CHECK(battery_drain(3, 12, 0, 60, 1.0) == 0.0);
  CHECK(battery_drain(3, 12, 6.64, 60, 0.5) == doctest::Approx(2 * 2.7667).epsilon(1e-4));
  CHECK_THROWS_AS(battery_drain(3, 0, 1, 60, 1), InputError);
  CHECK_THROWS_AS(battery_drain(3, 12, -1, 60, 1), InputError);

  std::ostringstream out, err;
  CHECK(cmd_battery(BatteryOptions{}, out, err) == kExitOk);
  CHECK(out.str().find("2.7667%") != std::string::npos);
  BatteryOptions bad;
  bad.capacity = 0;
  CHECK(cmd_battery(bad, out, err) == kExitBadConfig);
}

TEST_CASE("validate and run on the small city") {
  std::ostringstream out, err;
  CommonOptions o;
  o.config = kCity;
  o.out_dir = fresh_dir("run");
  CHECK(cmd_validate(o, out, err) == kExitOk);
  CHECK(cmd_run(o, out, err) == kExitOk);
  for (const char* f : {"decisions.csv", "elections.csv", "map_build.csv", "mode_counts.csv", "final_nodes.csv",
                        "summary.json", "manifest.json"}) {
    CHECK(fs::exists(o.out_dir / f));
  }
  const std::string manifest = read_text_file(o.out_dir / "manifest.json");
  CHECK(manifest.find(o.out_dir.string()) == std::string::npos);
}

TEST_CASE("configuration problems exit with 2") {
  std::ostringstream out, err;
  CommonOptions o;
  o.out_dir = fresh_dir("bad");
  o.config = fs::temp_directory_path() / "curbnet_does_not_exist.cfg";
  CHECK(cmd_run(o, out, err) == kExitBadConfig);

  o.config = kCity;
  o.overrides = {"map_order=4"};
  CHECK(cmd_run(o, out, err) == kExitBadConfig);
  o.overrides = {"not_a_key=1"};
  CHECK(cmd_validate(o, out, err) == kExitBadConfig);
  CHECK_FALSE(err.str().empty());
}

TEST_CASE("presets and seeds reach the config") {
  std::ostringstream out, err;
  CommonOptions o;
  o.config = kCity;
  o.preset = "set2";
  o.seed = 17;
  o.out_dir = fresh_dir("preset");
  CHECK(cmd_run(o, out, err) == kExitOk);
  const std::string manifest = read_text_file(o.out_dir / "manifest.json");
  CHECK(manifest.find("\"seed\": \"17\"") != std::string::npos);
}

TEST_CASE("clustered comparison") {
  std::ostringstream out, err;
  CommonOptions o;
  o.out_dir = fresh_dir("clustered");
  CompareOptions c;
  c.clustered = true;
  CHECK(cmd_compare(o, c, out, err) == kExitOk);
  CHECK(fs::exists(o.out_dir / "compare.json"));
  CHECK(out.str().find("clustered fixture") != std::string::npos);
}

TEST_CASE("default output directory follows the environment") {
  ::setenv("CURBNET_OUT_DIR", "/tmp/somewhere", 1);
  CHECK(default_out_dir() == fs::path("/tmp/somewhere"));
  ::unsetenv("CURBNET_OUT_DIR");
  CHECK(default_out_dir() == fs::path("out"));
}
