#pragma once

// Output files. Every command writes plain CSV/JSON into one directory and a
// manifest holding the config hash, seed, code version and a hash of each
// file, so a rerun can be checked byte for byte.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curbnet/broadcast.hpp"
#include "curbnet/engine.hpp"

namespace curbnet {

std::string decisions_csv(const RunArtifacts& a);
std::string elections_csv(const RunArtifacts& a);
std::string map_build_csv(const RunArtifacts& a);
std::string mode_counts_csv(const RunArtifacts& a);
std::string final_nodes_csv(const RunArtifacts& a);
/// `seed,t,count` rows.
std::string reachability_csv(const BroadcastResult& r, std::uint64_t seed);
/// Headline numbers of a run as a JSON object.
std::string run_summary_json(const RunArtifacts& a, const Scenario& s);

/// Collects files for one output directory and writes the manifest last.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write(const std::string& name, const std::string& text);

  /// Writes manifest.json. `fields` are extra top-level string entries.
  void write_manifest(const std::string& command, const std::map<std::string, std::string>& fields);
  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

/// Writes every run artifact (CSV series, summary.json) into `out`.
void write_run_artifacts(const RunArtifacts& a, const Scenario& s, OutputDir& out);

}  // namespace curbnet
