#include "report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "matchlab/error.hpp"
#include "matchlab/io.hpp"

namespace matchlab::cli {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

void InputHasher::add(const std::filesystem::path& path) {
  files_.emplace_back(path.generic_string(), sha256_hex(io::read_text(path)));
}

void InputHasher::add_report(const std::filesystem::path& path) {
  json doc = read_json(path);
  if (doc.is_object()) doc.erase("run");
  files_.emplace_back(path.generic_string(), sha256_hex(doc.dump()));
}

void InputHasher::add_manifest(const std::filesystem::path& manifest) {
  add(manifest);
  const auto rows = io::read_csv(manifest);
  if (rows.empty()) return;
  const auto& header = rows.front();
  std::vector<std::size_t> path_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "latent_path" || header[c] == "facerec_path") path_cols.push_back(c);
  }
  const auto base = manifest.parent_path();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    for (auto c : path_cols) {
      if (c < rows[r].size() && !rows[r][c].empty()) {
        referenced_.push_back(sha256_hex(io::read_text(base / rows[r][c])));
      }
    }
  }
}

json InputHasher::to_json() const {
  json files = json::array();
  std::string joined;
  for (const auto& [path, digest] : files_) {
    joined += digest + '\n';
    files.push_back({{"path", path}, {"sha256", digest}});
  }
  for (const auto& digest : referenced_) joined += digest + '\n';
  return {{"sha256", sha256_hex(joined)}, {"files", std::move(files)}, {"referenced_files", referenced_.size()}};
}

json envelope(const std::string& command, json config, const InputHasher& inputs, const RunInfo& run) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return {{"tool", {{"name", "matchlab"}, {"version", kToolVersion}}},
          {"command", command},
          {"config", std::move(config)},
          {"inputs", inputs.to_json()},
          {"run", {{"created_at", stamp.str()}, {"threads", run.threads}, {"log_level", run.log_level}}}};
}

void write_json(const std::filesystem::path& path, const json& doc) { io::write_text(path, doc.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const MatchSet& ms) {
  json pairs = json::array();
  for (const auto& p : ms.pairs) {
    json j = {{"id_a", p.id_a}, {"id_b", p.id_b}, {"distance", p.distance}};
    j["ref_a"] = p.ref_a ? json(*p.ref_a) : json(nullptr);
    j["ref_b"] = p.ref_b ? json(*p.ref_b) : json(nullptr);
    pairs.push_back(std::move(j));
  }
  return {{"n_pairs", ms.size()}, {"provenance", ms.provenance}, {"pairs", std::move(pairs)}};
}

MatchSet match_set_from_json(const json& doc) {
  try {
    MatchSet ms;
    for (const auto& j : doc.at("pairs")) {
      MatchPair p;
      p.id_a = j.at("id_a").get<std::string>();
      p.id_b = j.at("id_b").get<std::string>();
      p.distance = j.at("distance").get<double>();
      if (j.contains("ref_a") && !j["ref_a"].is_null()) p.ref_a = j["ref_a"].get<std::string>();
      if (j.contains("ref_b") && !j["ref_b"].is_null()) p.ref_b = j["ref_b"].get<std::string>();
      ms.pairs.push_back(std::move(p));
    }
    if (doc.contains("provenance")) ms.provenance = doc["provenance"].get<std::map<std::string, std::string>>();
    return ms;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed match set: ") + e.what());
  }
}

MatchSet load_match_set(const std::filesystem::path& path) {
  const json doc = read_json(path);
  if (!doc.contains("matches")) throw Error(ErrorCode::ParseError, path.string() + ": no \"matches\" member");
  return match_set_from_json(doc["matches"]);
}

}  // namespace matchlab::cli
