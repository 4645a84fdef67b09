#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "matchlab/dataset.hpp"
#include "matchlab/matching.hpp"

namespace matchlab {

/// Recognition embeddings from one model, keyed by sample id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  /// ShapeError for ragged or empty vectors, NonFinite for NaN/inf entries.
  EmbeddingTable(std::string model_name, std::map<std::string, Eigen::VectorXd> vectors);

  const std::string& model_name() const noexcept { return model_name_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  Eigen::Index dim() const noexcept { return dim_; }
  bool contains(const std::string& id) const { return vectors_.count(id) != 0; }
  /// MissingEmbedding when absent.
  const Eigen::VectorXd& at(const std::string& id) const;
  const std::map<std::string, Eigen::VectorXd>& vectors() const noexcept { return vectors_; }

 private:
  std::string model_name_;
  std::map<std::string, Eigen::VectorXd> vectors_;
  Eigen::Index dim_ = 0;
};

/// CSV rows of sample_id followed by vector entries. A first row whose second
/// field is not numeric is treated as a header.
EmbeddingTable load_embeddings(const std::string& path, std::string model_name);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

enum class EmbeddingDistance { Euclidean, Cosine };

double embedding_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, EmbeddingDistance kind);

/// Test-to-reference distances, split by the test sample's attribute.
struct GroupDistances {
  std::vector<double> group0;
  std::vector<double> group1;
};

/// MissingReference when a pair lacks references, MissingEmbedding when any
/// of the four ids is absent from the table.
GroupDistances same_identity_distances(const MatchSet& ms, const Dataset& ds, const EmbeddingTable& table,
                                       EmbeddingDistance kind = EmbeddingDistance::Euclidean);

struct BiasGap {
  double difference = 0.0;  // mean(first) - mean(second)
  double sem0 = 0.0;
  double sem1 = 0.0;
};

/// EmptyGroup when either list is empty.
BiasGap bias_gap(const std::vector<double>& first, const std::vector<double>& second);

struct ModelBias {
  std::string model_name;
  double mean_dist_group0 = 0.0;
  double mean_dist_group1 = 0.0;
  double difference = 0.0;  // mean of focus group minus the other
  double sem_group0 = 0.0;
  double sem_group1 = 0.0;
  std::size_t n_group0 = 0;
  std::size_t n_group1 = 0;
};

struct BiasReport {
  std::vector<ModelBias> models;
  std::map<std::string, std::string> provenance;
};

struct BenchmarkOptions {
  EmbeddingDistance distance = EmbeddingDistance::Euclidean;
  int focus_group = 0;  // difference = mean(focus) - mean(other)
  int threads = 1;      // one task per model
};

BiasReport bias_report(const MatchSet& ms, const Dataset& ds, const std::vector<EmbeddingTable>& tables,
                       const BenchmarkOptions& opt = {});

/// Unmatched baseline: every sample with another same-identity sample,
/// each paired with one such reference drawn under `seed`.
GroupDistances unmatched_distances(const Dataset& ds, const EmbeddingTable& table, std::uint64_t seed,
                                   EmbeddingDistance kind = EmbeddingDistance::Euclidean);

BiasReport unmatched_bias_report(const Dataset& ds, const std::vector<EmbeddingTable>& tables, std::uint64_t seed,
                                 const BenchmarkOptions& opt = {});

}  // namespace matchlab
