#include "curbnet/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "curbnet/errors.hpp"
#include "curbnet/hash.hpp"
#include "curbnet/random.hpp"

namespace curbnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Shortest round-trip representation, so configs survive write/read intact.
std::string num(double v) { return fmt::format("{}", v); }

std::string fixed3(double v) {
  std::string s = fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  return s;
}

// Lines of a data file, header skipped, blank lines dropped. Record numbers
// are 1-based data rows.
struct CsvRow {
  std::size_t record;
  std::vector<std::string> fields;
};

std::vector<CsvRow> csv_rows(const std::string& text, std::string_view expected_header, const char* what) {
  std::vector<CsvRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      if (t != expected_header) {
        throw LoadError("header", "0", fmt::format("{} must start with the header '{}'", what, expected_header));
      }
      header_seen = true;
      continue;
    }
    CsvRow row{++record, {}};
    for (auto f : split(t, ',')) row.fields.emplace_back(f);
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw LoadError("header", "0", fmt::format("{} is empty", what));
  return rows;
}

double need_double(const CsvRow& row, std::size_t k, const char* field) {
  auto v = to_double(row.fields[k]);
  if (!v || !std::isfinite(*v)) {
    throw LoadError(field, std::to_string(row.record), fmt::format("'{}' is not a finite number", row.fields[k]));
  }
  return *v;
}

VehicleId need_id(const CsvRow& row, std::size_t k) {
  auto v = to_uint(row.fields[k]);
  if (!v || *v > UINT32_MAX) {
    throw LoadError("id", std::to_string(row.record), fmt::format("'{}' is not a vehicle id", row.fields[k]));
  }
  return static_cast<VehicleId>(*v);
}

double cfg_double(const std::string& key, const std::string& value) {
  auto v = to_double(value);
  if (!v || !std::isfinite(*v)) throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, value));
  return *v;
}

int cfg_int(const std::string& key, const std::string& value) {
  auto v = to_int(value);
  if (!v || *v < INT32_MIN || *v > INT32_MAX) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
  return static_cast<int>(*v);
}

std::uint64_t cfg_uint(const std::string& key, const std::string& value) {
  auto v = to_uint(value);
  if (!v) throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, value));
  return *v;
}

template <std::size_t N>
std::array<double, N> cfg_list(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != N) throw ConfigError(fmt::format("{}: expected {} comma-separated numbers", key, N));
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) out[k] = cfg_double(key, std::string(parts[k]));
  return out;
}

template <std::size_t N>
std::string list_str(const std::array<double, N>& a) {
  std::string s;
  for (std::size_t k = 0; k < N; ++k) {
    if (k) s += ',';
    s += num(a[k]);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ScenarioConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be positive", key));
  };
  positive(cell_size, "cell_size");
  if (map_order < 1 || map_order % 2 == 0) throw ConfigError("map_order must be an odd integer >= 1");
  positive(beacon_rate, "beacon_rate");
  weights.validate();
  if (delta_cov.cells && *delta_cov.cells < 1) throw ConfigError("delta_cov.cells must be >= 1");
  if (!(delta_cov.fraction > 0.0) || delta_cov.fraction > 1.0) throw ConfigError("delta_cov.fraction must be in (0, 1]");
  if (!std::isfinite(activation_threshold)) throw ConfigError("activation_threshold must be finite");
  positive(listen_duration, "listen_duration");
  positive(wake_period, "wake_period");
  positive(cch_interval, "cch_interval");
  if (cch_interval > wake_period) throw ConfigError("cch_interval must not exceed wake_period");
  if (backoff_slots < 1) throw ConfigError("backoff_slots must be >= 1");
  if (d_score_max) positive(*d_score_max, "d_score_max");
  if (miss_threshold < 1) throw ConfigError("miss_threshold must be >= 1");
  if (duration < 0.0 || !std::isfinite(duration)) throw ConfigError("duration must be >= 0");
  if (area_width < 0.0 || area_height < 0.0) throw ConfigError("area size must be >= 0");
  quality.validate();
  for (double p : beacon_loss) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("beacon_loss entries must lie in [0, 1]");
  }
  if (broadcast_time && (*broadcast_time < 0.0 || !std::isfinite(*broadcast_time))) {
    throw ConfigError("broadcast.time must be >= 0");
  }
}

void SynthesisParams::validate() const {
  if (!(density > 0.0)) throw InputError("density must be positive");
  if (!(area_km2 > 0.0)) throw InputError("area must be positive");
  if (!(duration > 0.0)) throw InputError("duration must be positive");
  if (!(parked_ratio >= 0.0)) throw InputError("parked ratio must be >= 0");
  if (parked_count && *parked_count < 0) throw InputError("parked count must be >= 0");
  if (!(block > 0.0)) throw InputError("block size must be positive");
  if (!(setback >= 0.0) || 2.0 * setback >= block) throw InputError("setback must be in [0, block/2)");
  if (!(min_speed > 0.0) || max_speed < min_speed) throw InputError("speed range must be positive and ordered");
  if (!(park_window >= 0.0)) throw InputError("park window must be >= 0");
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = line;
    if (auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
    t = trim(t);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", lineno));
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (key.empty()) throw ConfigError(fmt::format("line {}: empty key", lineno));
    if (!kv.emplace(key, value).second) throw ConfigError(fmt::format("line {}: duplicate key '{}'", lineno, key));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += fmt::format("{} = {}\n", k, v);
  return out;
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("override '{}' is not key=value", o));
    std::string key(trim(std::string_view(o).substr(0, eq)));
    std::string value(trim(std::string_view(o).substr(eq + 1)));
    if (key.empty()) throw ConfigError(fmt::format("override '{}' has an empty key", o));
    kv[key] = value;
  }
}

std::pair<ScenarioConfig, ScenarioSource> parse_config(const KeyValues& kv, const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  ScenarioSource src;
  SynthesisParams sp;
  bool synth = false;
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };

  for (const auto& [key, value] : kv) {
    if (key == "cell_size") c.cell_size = cfg_double(key, value);
    else if (key == "map_order") c.map_order = cfg_int(key, value);
    else if (key == "beacon_rate") c.beacon_rate = cfg_double(key, value);
    else if (key == "weights.kappa") c.weights.kappa = cfg_double(key, value);
    else if (key == "weights.lambda") c.weights.lambda = cfg_double(key, value);
    else if (key == "weights.mu") c.weights.mu = cfg_double(key, value);
    else if (key == "weights.preset") {
      if (value == "set1") c.weights = DecisionWeights::set1();
      else if (value == "set2") c.weights = DecisionWeights::set2();
      else if (value == "default") c.weights = DecisionWeights{};
      else throw ConfigError(fmt::format("weights.preset: unknown preset '{}'", value));
    } else if (key == "delta_cov.cells") c.delta_cov.cells = cfg_int(key, value);
    else if (key == "delta_cov.fraction") c.delta_cov.fraction = cfg_double(key, value);
    else if (key == "activation_threshold") c.activation_threshold = cfg_double(key, value);
    else if (key == "listen_duration") c.listen_duration = cfg_double(key, value);
    else if (key == "wake_period") c.wake_period = cfg_double(key, value);
    else if (key == "cch_interval") c.cch_interval = cfg_double(key, value);
    else if (key == "backoff_slots") c.backoff_slots = cfg_int(key, value);
    else if (key == "d_score_max") {
      if (value == "auto") c.d_score_max.reset();
      else c.d_score_max = cfg_double(key, value);
    } else if (key == "miss_threshold") c.miss_threshold = cfg_int(key, value);
    else if (key == "rng_seed" || key == "seed") c.rng_seed = cfg_uint(key, value);
    else if (key == "duration") c.duration = cfg_double(key, value);
    else if (key == "area.width") c.area_width = cfg_double(key, value);
    else if (key == "area.height") c.area_height = cfg_double(key, value);
    else if (key == "quality.los") c.quality.los = cfg_list<4>(key, value);
    else if (key == "quality.nlos") c.quality.nlos = cfg_list<4>(key, value);
    else if (key == "beacon_loss") c.beacon_loss = cfg_list<6>(key, value);
    else if (key == "broadcast.time") c.broadcast_time = cfg_double(key, value);
    else if (key == "broadcast.x") c.broadcast_origin.x = cfg_double(key, value);
    else if (key == "broadcast.y") c.broadcast_origin.y = cfg_double(key, value);
    else if (key == "trace") src.trace = path_of(value);
    else if (key == "events") src.events = path_of(value);
    else if (key == "obstructions") src.obstructions = path_of(value);
    else if (key.rfind("synth.", 0) == 0) {
      synth = true;
      const std::string k = key.substr(6);
      if (k == "density") sp.density = cfg_double(key, value);
      else if (k == "area_km2") sp.area_km2 = cfg_double(key, value);
      else if (k == "duration") sp.duration = cfg_double(key, value);
      else if (k == "parked_ratio") sp.parked_ratio = cfg_double(key, value);
      else if (k == "parked_count") sp.parked_count = cfg_int(key, value);
      else if (k == "seed") sp.seed = cfg_uint(key, value);
      else if (k == "block") sp.block = cfg_double(key, value);
      else if (k == "setback") sp.setback = cfg_double(key, value);
      else if (k == "min_speed") sp.min_speed = cfg_double(key, value);
      else if (k == "max_speed") sp.max_speed = cfg_double(key, value);
      else if (k == "park_window") sp.park_window = cfg_double(key, value);
      else throw ConfigError(fmt::format("unknown key '{}'", key));
    } else {
      throw ConfigError(fmt::format("unknown key '{}'", key));
    }
  }
  if (synth) {
    if (src.trace || src.events || src.obstructions) {
      throw ConfigError("synth.* keys cannot be combined with trace/events/obstructions files");
    }
    if (!kv.count("synth.seed")) sp.seed = c.rng_seed;
    try {
      sp.validate();
    } catch (const InputError& e) {
      throw ConfigError(std::string("synth: ") + e.what());
    }
    src.synth = sp;
  } else if (!src.trace && !src.events) {
    throw ConfigError("config names neither a trace/events file nor synth.* parameters");
  }
  c.validate();
  return {c, src};
}

KeyValues config_to_key_values(const ScenarioConfig& c) {
  KeyValues kv;
  kv["cell_size"] = num(c.cell_size);
  kv["map_order"] = std::to_string(c.map_order);
  kv["beacon_rate"] = num(c.beacon_rate);
  kv["weights.kappa"] = num(c.weights.kappa);
  kv["weights.lambda"] = num(c.weights.lambda);
  kv["weights.mu"] = num(c.weights.mu);
  if (c.delta_cov.cells) kv["delta_cov.cells"] = std::to_string(*c.delta_cov.cells);
  kv["delta_cov.fraction"] = num(c.delta_cov.fraction);
  kv["activation_threshold"] = num(c.activation_threshold);
  kv["listen_duration"] = num(c.listen_duration);
  kv["wake_period"] = num(c.wake_period);
  kv["cch_interval"] = num(c.cch_interval);
  kv["backoff_slots"] = std::to_string(c.backoff_slots);
  kv["d_score_max"] = c.d_score_max ? num(*c.d_score_max) : "auto";
  kv["miss_threshold"] = std::to_string(c.miss_threshold);
  kv["rng_seed"] = std::to_string(c.rng_seed);
  kv["duration"] = num(c.duration);
  kv["area.width"] = num(c.area_width);
  kv["area.height"] = num(c.area_height);
  kv["quality.los"] = list_str(c.quality.los);
  kv["quality.nlos"] = list_str(c.quality.nlos);
  kv["beacon_loss"] = list_str(c.beacon_loss);
  if (c.broadcast_time) {
    kv["broadcast.time"] = num(*c.broadcast_time);
    kv["broadcast.x"] = num(c.broadcast_origin.x);
    kv["broadcast.y"] = num(c.broadcast_origin.y);
  }
  return kv;
}

// ---------------------------------------------------------------------------
// Data files

MobilityTrace parse_trace_csv(const std::string& text) {
  MobilityTrace trace;
  for (const auto& row : csv_rows(text, "time,id,x,y,speed,bearing", "trace")) {
    if (row.fields.size() != 6) {
      throw LoadError("columns", std::to_string(row.record), fmt::format("expected 6 columns, got {}", row.fields.size()));
    }
    TraceSample s;
    s.time = need_double(row, 0, "time");
    s.id = need_id(row, 1);
    s.pos = {need_double(row, 2, "x"), need_double(row, 3, "y")};
    s.speed = need_double(row, 4, "speed");
    s.bearing = need_double(row, 5, "bearing");
    if (s.speed < 0.0) throw LoadError("speed", std::to_string(row.record), "speed must be >= 0");
    trace.samples.push_back(s);
  }
  return trace;
}

std::string format_trace_csv(const MobilityTrace& trace) {
  std::string out = "time,id,x,y,speed,bearing\n";
  for (const auto& s : trace.samples) {
    out += fmt::format("{},{},{},{},{},{}\n", fixed3(s.time), s.id, fixed3(s.pos.x), fixed3(s.pos.y), fixed3(s.speed),
                       fixed3(s.bearing));
  }
  return out;
}

std::vector<ParkingEvent> parse_events_csv(const std::string& text) {
  std::vector<ParkingEvent> events;
  for (const auto& row : csv_rows(text, "time,id,kind,x,y", "events")) {
    if (row.fields.size() != 5) {
      throw LoadError("columns", std::to_string(row.record), fmt::format("expected 5 columns, got {}", row.fields.size()));
    }
    ParkingEvent e;
    e.time = need_double(row, 0, "time");
    e.id = need_id(row, 1);
    if (row.fields[2] == "park") e.kind = ParkingKind::kPark;
    else if (row.fields[2] == "depart") e.kind = ParkingKind::kDepart;
    else throw LoadError("kind", std::to_string(row.record), fmt::format("'{}' is not park or depart", row.fields[2]));
    if (e.kind == ParkingKind::kPark) {
      e.position = {need_double(row, 3, "x"), need_double(row, 4, "y")};
    } else {
      // Position is optional for departures.
      if (!row.fields[3].empty()) e.position.x = need_double(row, 3, "x");
      if (!row.fields[4].empty()) e.position.y = need_double(row, 4, "y");
    }
    events.push_back(e);
  }
  return events;
}

std::string format_events_csv(const std::vector<ParkingEvent>& events) {
  std::string out = "time,id,kind,x,y\n";
  for (const auto& e : events) {
    out += fmt::format("{},{},{},{},{}\n", fixed3(e.time), e.id, e.kind == ParkingKind::kPark ? "park" : "depart",
                       fixed3(e.position.x), fixed3(e.position.y));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("path", path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

// ---------------------------------------------------------------------------
// Scenario

double Scenario::data_end() const {
  double t = 0.0;
  if (!trace.samples.empty()) t = trace.samples.back().time;
  for (const auto& e : events) t = std::max(t, e.time);
  return t;
}

double Scenario::end_time() const { return config.duration > 0.0 ? config.duration : data_end(); }

namespace {

void sort_data(Scenario& s) {
  std::stable_sort(s.trace.samples.begin(), s.trace.samples.end(), [](const TraceSample& a, const TraceSample& b) {
    return a.time != b.time ? a.time < b.time : a.id < b.id;
  });
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const ParkingEvent& a, const ParkingEvent& b) { return a.time < b.time; });
}

}  // namespace

void validate_scenario(const Scenario& s) {
  try {
    s.config.validate();
  } catch (const ConfigError& e) {
    throw LoadError("config", "-", e.what());
  }
  const double w = s.config.area_width;
  const double h = s.config.area_height;
  const bool boxed = w > 0.0 && h > 0.0;
  constexpr double kTol = 1e-6;
  auto inside = [&](GeoCoord p) {
    return !boxed || (p.x >= -kTol && p.y >= -kTol && p.x <= w + kTol && p.y <= h + kTol);
  };

  std::map<VehicleId, double> last_time;
  for (std::size_t k = 0; k < s.trace.samples.size(); ++k) {
    const auto& smp = s.trace.samples[k];
    const std::string rec = std::to_string(k + 1);
    if (!std::isfinite(smp.time) || !std::isfinite(smp.pos.x) || !std::isfinite(smp.pos.y)) {
      throw LoadError("time/x/y", rec, "non-finite value");
    }
    if (smp.speed < 0.0 || !std::isfinite(smp.speed)) throw LoadError("speed", rec, "speed must be finite and >= 0");
    if (!inside(smp.pos)) throw LoadError("x/y", rec, "position outside the scenario bounding box");
    auto [it, fresh] = last_time.try_emplace(smp.id, smp.time);
    if (!fresh) {
      if (!(smp.time > it->second)) {
        throw LoadError("time", rec, fmt::format("timestamps of vehicle {} are not strictly increasing", smp.id));
      }
      it->second = smp.time;
    }
  }

  std::map<VehicleId, bool> parked;
  for (std::size_t k = 0; k < s.events.size(); ++k) {
    const auto& e = s.events[k];
    const std::string rec = std::to_string(k + 1);
    if (!std::isfinite(e.time) || e.time < 0.0) throw LoadError("time", rec, "event time must be finite and >= 0");
    if (k > 0 && e.time < s.events[k - 1].time) throw LoadError("time", rec, "events are not time-ordered");
    bool& is_parked = parked[e.id];
    if (e.kind == ParkingKind::kPark) {
      if (is_parked) throw LoadError("kind", rec, fmt::format("vehicle {} parks twice without departing", e.id));
      if (!std::isfinite(e.position.x) || !std::isfinite(e.position.y) || !inside(e.position)) {
        throw LoadError("x/y", rec, "park position outside the scenario bounding box");
      }
      is_parked = true;
    } else {
      if (!is_parked) throw LoadError("kind", rec, fmt::format("vehicle {} departs before parking", e.id));
      is_parked = false;
    }
  }
}

Scenario build_scenario(const ScenarioConfig& cfg, const ScenarioSource& src) {
  if (src.synth) return synthesize(*src.synth, cfg);
  Scenario s;
  s.config = cfg;
  if (src.trace) s.trace = parse_trace_csv(read_text_file(*src.trace));
  if (src.events) s.events = parse_events_csv(read_text_file(*src.events));
  if (src.obstructions) {
    try {
      s.obstructions = load_obstructions(*src.obstructions);
    } catch (const FormatError& e) {
      throw LoadError("obstructions", src.obstructions->string(), e.what());
    } catch (const InputError& e) {
      throw LoadError("obstructions", src.obstructions->string(), e.what());
    }
  }
  // Per-vehicle time order is checked on file order before sorting.
  validate_scenario(s);
  sort_data(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& config_path, const std::vector<std::string>& overrides) {
  KeyValues kv = read_key_values(config_path);
  apply_overrides(kv, overrides);
  auto [cfg, src] = parse_config(kv, config_path.parent_path());
  return build_scenario(cfg, src);
}

// ---------------------------------------------------------------------------
// Synthetic city

int RoadGrid::columns() const { return static_cast<int>(std::floor(width / block + 1e-9)) + 1; }
int RoadGrid::rows() const { return static_cast<int>(std::floor(height / block + 1e-9)) + 1; }

GeoCoord RoadGrid::intersection(int row, int col) const { return {col * block, row * block}; }

namespace {

// Piecewise-linear path through intersections.
struct Leg {
  GeoCoord from, to;
  double length;
};

double bearing_of(GeoCoord from, GeoCoord to) {
  double deg = std::atan2(to.x - from.x, to.y - from.y) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  return deg;
}

}  // namespace

Scenario synthesize(const SynthesisParams& p, ScenarioConfig base) {
  p.validate();
  const double side = std::sqrt(p.area_km2) * 1000.0;
  RoadGrid roads{p.block, side, side};
  if (roads.columns() < 2) throw InputError("area is smaller than one city block");

  Scenario s;
  s.config = std::move(base);
  s.config.area_width = side;
  s.config.area_height = side;
  if (s.config.duration <= 0.0) s.config.duration = p.duration;
  s.roads = roads;

  // Buildings: one square per full block, inset from the road centerlines.
  std::vector<std::vector<GeoCoord>> rings;
  const int n = roads.columns();
  for (int r = 0; r + 1 < n; ++r) {
    for (int c = 0; c + 1 < n; ++c) {
      const double x0 = c * p.block + p.setback, x1 = (c + 1) * p.block - p.setback;
      const double y0 = r * p.block + p.setback, y1 = (r + 1) * p.block - p.setback;
      rings.push_back({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
    }
  }
  s.obstructions = ObstructionSet(std::move(rings));

  const int movers = static_cast<int>(std::lround(p.density * p.area_km2));
  const int parked = p.parked_count ? *p.parked_count : static_cast<int>(std::lround(movers * p.parked_ratio));

  // Moving vehicles: ids 1..movers. Each keeps one speed for the whole run and
  // chains Manhattan trips (x-first or y-first at random) between random
  // intersections, sampled once per second.
  Rng mob(derive_seed(p.seed, 1));
  const int steps = static_cast<int>(std::floor(p.duration + 1e-9));
  for (int v = 0; v < movers; ++v) {
    const VehicleId id = static_cast<VehicleId>(v + 1);
    const double speed = mob.uniform(p.min_speed, p.max_speed);
    int cr = static_cast<int>(mob.below(n)), cc = static_cast<int>(mob.below(n));
    std::vector<Leg> legs;
    std::size_t leg = 0;
    double along = 0.0;  // meters travelled on legs[leg]

    auto plan_trip = [&] {
      legs.clear();
      leg = 0;
      along = 0.0;
      int dr = cr, dc = cc;
      while (dr == cr && dc == cc) {
        dr = static_cast<int>(mob.below(n));
        dc = static_cast<int>(mob.below(n));
      }
      const GeoCoord a = roads.intersection(cr, cc);
      const GeoCoord b = roads.intersection(dr, dc);
      const GeoCoord corner = mob.bernoulli(0.5) ? GeoCoord{b.x, a.y} : GeoCoord{a.x, b.y};
      for (auto [f, t] : {std::pair{a, corner}, std::pair{corner, b}}) {
        const double len = distance(f, t);
        if (len > 0.0) legs.push_back({f, t, len});
      }
      cr = dr;
      cc = dc;
    };
    plan_trip();

    for (int step = 0; step <= steps; ++step) {
      if (step > 0) {
        double remaining = speed;
        while (remaining > 0.0) {
          const double left = legs[leg].length - along;
          if (remaining < left) {
            along += remaining;
            remaining = 0.0;
          } else {
            remaining -= left;
            if (++leg == legs.size()) {
              plan_trip();
            } else {
              along = 0.0;
            }
          }
        }
      }
      const Leg& L = legs[leg];
      const double f = along / L.length;
      const GeoCoord pos{L.from.x + f * (L.to.x - L.from.x), L.from.y + f * (L.to.y - L.from.y)};
      s.trace.samples.push_back({static_cast<double>(step), id, pos, speed, bearing_of(L.from, L.to)});
    }
  }

  // Parked cars: ids after the movers, uniform over total road length.
  Rng park(derive_seed(p.seed, 2));
  const double road_len = (n - 1) * p.block;
  for (int k = 0; k < parked; ++k) {
    const VehicleId id = static_cast<VehicleId>(movers + k + 1);
    const bool horizontal = park.bernoulli(0.5);
    const int line = static_cast<int>(park.below(n));
    const double pos = park.uniform(0.0, road_len);
    ParkingEvent e;
    e.id = id;
    e.kind = ParkingKind::kPark;
    e.position = horizontal ? GeoCoord{pos, line * p.block} : GeoCoord{line * p.block, pos};
    e.time = p.park_window > 0.0 ? std::floor(park.uniform(0.0, p.park_window)) : 0.0;
    s.events.push_back(e);
  }

  sort_data(s);
  // Round-trip through the CSV precision so a written scenario reloads to the
  // same values (and the same hash).
  s.trace = parse_trace_csv(format_trace_csv(s.trace));
  s.events = parse_events_csv(format_events_csv(s.events));
  validate_scenario(s);
  return s;
}

void write_scenario(const Scenario& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  KeyValues kv = config_to_key_values(s.config);
  kv["trace"] = "trace.csv";
  kv["events"] = "events.csv";
  kv["obstructions"] = "obstructions.json";
  write_text_file(dir / "config.txt", format_key_values(kv));
  write_text_file(dir / "trace.csv", format_trace_csv(s.trace));
  write_text_file(dir / "events.csv", format_events_csv(s.events));
  write_text_file(dir / "obstructions.json", obstructions_to_json(s.obstructions));
}

std::string scenario_hash(const Scenario& s) {
  Fnv1a h;
  h.update(format_key_values(config_to_key_values(s.config)));
  h.update("\x1e");
  h.update(format_trace_csv(s.trace));
  h.update("\x1e");
  h.update(format_events_csv(s.events));
  h.update("\x1e");
  h.update(obstructions_to_json(s.obstructions));
  return h.hex();
}

}  // namespace curbnet
