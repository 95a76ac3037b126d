#pragma once

// Subcommands of the `curbnet` tool. Each returns a process exit code:
// 0 on success, 2 for bad configuration or input, 3 when a run breaks an
// internal invariant, 1 for anything else.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace curbnet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitInvariant = 3;

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // dotted key=value
  std::filesystem::path out_dir = "out";
  int parallel = 1;
  std::optional<std::string> preset;  // set1 | set2
};

/// CURBNET_OUT_DIR when set, "out" otherwise.
std::filesystem::path default_out_dir();

struct SweepOptions {
  std::vector<double> kappa{1.0};
  std::vector<double> lambda{1.0};
  std::vector<double> mu{1.0};
  bool presets = false;  // add Set1 and Set2 as extra grid points
  int seeds = 1;
};

struct CompareOptions {
  int instances = 30;
  int min_cars = 12;
  int max_cars = 16;
  std::string objective = "lexicographic";  // or scalarized
  double epsilon = 0.01;
  double alpha = 0.05;
  bool clustered = false;  // 24-car clustered fixture instead of instances
  int cap = 24;
};

struct BroadcastCliOptions {
  std::vector<double> densities{20.0, 40.0, 80.0};
  int seeds = 50;
  double duration = 1800.0;
  double parked_ratio = 0.1;
  bool backhaul = true;
};

struct BatteryOptions {
  double power = 3.0;
  double voltage = 12.0;
  double hours = 6.64;
  double capacity = 60.0;
  double eol = 1.0;
};

int cmd_run(const CommonOptions& o, std::ostream& out, std::ostream& err);
int cmd_validate(const CommonOptions& o, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommonOptions& o, const SweepOptions& s, std::ostream& out, std::ostream& err);
int cmd_compare(const CommonOptions& o, const CompareOptions& c, std::ostream& out, std::ostream& err);
int cmd_broadcast(const CommonOptions& o, const BroadcastCliOptions& b, std::ostream& out, std::ostream& err);
int cmd_battery(const BatteryOptions& b, std::ostream& out, std::ostream& err);

}  // namespace curbnet
