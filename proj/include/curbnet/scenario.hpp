#pragma once

// Everything a run needs: protocol constants, mobility, parking events and
// obstructions. Scenarios are loaded from a key-value config file (which may
// point at CSV/JSON inputs or ask for a synthetic Manhattan-grid city) and are
// immutable afterwards.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curbnet/geo_grid.hpp"
#include "curbnet/propagation.hpp"
#include "curbnet/selforg.hpp"

namespace curbnet {

struct TraceSample {
  double time = 0.0;  // seconds
  VehicleId id = 0;
  GeoCoord pos;
  double speed = 0.0;    // m/s
  double bearing = 0.0;  // degrees clockwise from north

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

/// Samples sorted by (time, id).
struct MobilityTrace {
  std::vector<TraceSample> samples;

  friend bool operator==(const MobilityTrace&, const MobilityTrace&) = default;
};

enum class ParkingKind { kPark, kDepart };

struct ParkingEvent {
  double time = 0.0;
  VehicleId id = 0;
  ParkingKind kind = ParkingKind::kPark;
  GeoCoord position;  // meaningful for kPark

  friend bool operator==(const ParkingEvent&, const ParkingEvent&) = default;
};

struct ScenarioConfig {
  double cell_size = 30.0;
  int map_order = 11;
  double beacon_rate = 1.0;  // Hz
  DecisionWeights weights;
  DeltaCovRule delta_cov;
  double activation_threshold = 0.0;
  double listen_duration = 600.0;
  double wake_period = 15.0;
  double cch_interval = 0.050;
  int backoff_slots = 40;
  std::optional<double> d_score_max;  // calibrated from observed scores when unset
  int miss_threshold = 3;
  std::uint64_t rng_seed = 1;
  double duration = 0.0;  // 0: until the last trace sample or event
  double area_width = 0.0;
  double area_height = 0.0;  // 0: derived from the data
  QualityTable quality;
  std::array<double, 6> beacon_loss{};  // delivery loss probability per quality level
  std::optional<double> broadcast_time;
  GeoCoord broadcast_origin;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Manhattan grid city with constant-speed trips between intersections.
struct SynthesisParams {
  double density = 20.0;  // moving vehicles per km^2
  double area_km2 = 1.0;
  double duration = 1200.0;
  double parked_ratio = 0.1;  // parked cars per moving car
  std::optional<int> parked_count;  // overrides parked_ratio
  std::uint64_t seed = 1;
  double block = 100.0;     // road spacing, meters
  double setback = 12.0;    // building inset from the road centerline
  double min_speed = 8.0;
  double max_speed = 14.0;
  double park_window = 0.0;  // park times uniform in [0, park_window)

  void validate() const;
};

/// Axis-aligned street grid used by synthetic scenarios.
struct RoadGrid {
  double block = 100.0;
  double width = 0.0;
  double height = 0.0;

  int columns() const;  // vertical roads
  int rows() const;     // horizontal roads
  GeoCoord intersection(int row, int col) const;
};

struct Scenario {
  ScenarioConfig config;
  MobilityTrace trace;
  std::vector<ParkingEvent> events;  // sorted by time, stable
  ObstructionSet obstructions;
  std::optional<RoadGrid> roads;

  /// Latest trace sample or event time.
  double data_end() const;
  /// config.duration when set, data_end() otherwise.
  double end_time() const;
};

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; `#` starts a comment. Throws ConfigError.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

/// Applies `key=value` overrides. Throws ConfigError on malformed entries.
void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides);

struct ScenarioSource {
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> events;
  std::optional<std::filesystem::path> obstructions;
  std::optional<SynthesisParams> synth;
};

/// Splits a key-value document into protocol config and data source. Paths
/// are resolved against `base_dir`. Throws ConfigError on unknown keys or
/// malformed values.
std::pair<ScenarioConfig, ScenarioSource> parse_config(const KeyValues& kv, const std::filesystem::path& base_dir);

/// Loads and validates a scenario. Throws ConfigError for config problems and
/// LoadError for data files.
Scenario load_scenario(const std::filesystem::path& config_path, const std::vector<std::string>& overrides = {});
Scenario build_scenario(const ScenarioConfig& cfg, const ScenarioSource& src);

/// Enforces trace, event and config invariants. Throws LoadError.
void validate_scenario(const Scenario& s);

/// Deterministic synthetic city. Throws InputError for non-positive density,
/// area or duration.
Scenario synthesize(const SynthesisParams& params, ScenarioConfig base = {});

MobilityTrace parse_trace_csv(const std::string& text);
std::string format_trace_csv(const MobilityTrace& trace);
std::vector<ParkingEvent> parse_events_csv(const std::string& text);
std::string format_events_csv(const std::vector<ParkingEvent>& events);

/// Canonical config keys for a scenario config (no source entries).
KeyValues config_to_key_values(const ScenarioConfig& cfg);

/// Writes config.txt, trace.csv, events.csv and obstructions.json.
void write_scenario(const Scenario& s, const std::filesystem::path& dir);

/// Content hash over the canonical serialization.
std::string scenario_hash(const Scenario& s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace curbnet
