#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "matchlab/dataset.hpp"

namespace matchlab {

struct MatchConstraints {
  static constexpr double kDefaultFacerecThreshold = 0.6;

  std::optional<double> facerec_threshold;  // recognition-distance caliper
  bool require_references = false;          // both sides need a same-identity reference
  bool require_default_attrs = false;       // references must pass the default-attribute filter
};

/// InvalidArgument when a threshold is present but not positive.
void validate(const MatchConstraints& c);

struct MatchPair {
  std::string id_a;  // attribute 0
  std::string id_b;  // attribute 1
  double distance = 0.0;
  std::optional<std::string> ref_a;
  std::optional<std::string> ref_b;

  bool operator==(const MatchPair&) const = default;
};

struct MatchSet {
  std::vector<MatchPair> pairs;  // acceptance order
  std::map<std::string, std::string> provenance;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  /// id_a and id_b of every pair, in order (references excluded).
  std::vector<std::string> members() const;
};

/// Throws InvalidArgument describing the first violated MatchSet invariant:
/// cross-group pairs, distinct identities, no reused sample or identity,
/// well-formed references. Caliper match sets only guarantee unique samples,
/// so they are checked with strict_identities = false.
void validate_match_set(const MatchSet& ms, const Dataset& ds, bool strict_identities = true);

struct Neighbor {
  std::string id;
  double distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Euclidean distance between recognition embeddings.
double facerec_distance(const Sample& a, const Sample& b);

/// Reference difficulty d(reference, test); default is facerec_distance.
using DifficultyFn = std::function<double(const Sample& reference, const Sample& test)>;

/// Same identity, distinct sample, not excluded, default attributes when required.
std::vector<std::string> reference_candidates(const Sample& s, const Dataset& ds, const MatchConstraints& c,
                                              const std::unordered_set<std::string>& excluded = {});

/// Nearest non-excluded sample with the other attribute value and another
/// identity, subject to the optional recognition caliper and reference
/// requirement. Ties go to the lexicographically smaller id.
std::optional<Neighbor> find_match(const std::string& query, const Dataset& ds, const MatchConstraints& c,
                                   const std::unordered_set<std::string>& excluded = {});

struct GreedyOptions {
  std::optional<std::size_t> n_pairs;  // unlimited when empty
  int threads = 1;                     // distance table construction only
  DifficultyFn difficulty;             // facerec_distance when empty
};

/// Repeatedly accepts the globally closest feasible cross-group pair and
/// removes every sample of both identities. Ties: (id_a, id_b) ascending.
MatchSet greedy_match(const Dataset& ds, const MatchConstraints& c, const GreedyOptions& opt = {});

/// Chooses (ref_a, ref_b) minimizing |difficulty(ref_a, a) - difficulty(ref_b, b)|.
/// Excluded samples are never chosen. NoValidReference when a side has no candidate.
std::pair<std::string, std::string> select_references(const MatchPair& pair, const Dataset& ds,
                                                       const DifficultyFn& difficulty, const MatchConstraints& c,
                                                       const std::unordered_set<std::string>& excluded = {});

struct KnnMetric {
  enum class Kind { Gan, Facerec, Combined };
  Kind kind = Kind::Gan;
  double threshold = MatchConstraints::kDefaultFacerecThreshold;  // Combined only

  static KnnMetric gan() { return {Kind::Gan, 0.0}; }
  static KnnMetric facerec() { return {Kind::Facerec, 0.0}; }
  static KnnMetric combined(double threshold) { return {Kind::Combined, threshold}; }
};

/// k nearest other samples under `metric`, ordered by (distance, id).
/// Combined = GAN distance among candidates within the recognition threshold.
std::vector<Neighbor> knn_retrieve(const std::string& query, const Dataset& ds, std::size_t k,
                                   const KnnMetric& metric);

}  // namespace matchlab
