#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matchlab/matching.hpp"

namespace matchlab::cli {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);

/// Collects input files and summarizes them as per-file and combined SHA-256.
/// Files referenced from a manifest enter the combined digest only.
class InputHasher {
 public:
  void add(const std::filesystem::path& path);
  /// A JSON report hashed without its "run" member, so reproducible runs
  /// upstream give identical digests here.
  void add_report(const std::filesystem::path& path);
  /// Manifest plus every latent/recognition file it references.
  void add_manifest(const std::filesystem::path& manifest);
  json to_json() const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;  // (path as given, digest)
  std::vector<std::string> referenced_;
};

struct RunInfo {
  int threads = 1;
  std::string log_level;
};

/// Report envelope shared by every subcommand. "run" holds the only fields
/// that may differ between reproducible runs.
json envelope(const std::string& command, json config, const InputHasher& inputs, const RunInfo& run);

void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

json to_json(const MatchSet& ms);
MatchSet match_set_from_json(const json& doc);
/// Reads the "matches" member of a match or propensity report.
MatchSet load_match_set(const std::filesystem::path& path);

/// NaN and infinities become null.
json number_or_null(double v);

}  // namespace matchlab::cli
