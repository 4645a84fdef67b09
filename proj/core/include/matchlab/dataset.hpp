#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "matchlab/latent.hpp"

namespace matchlab {

enum class CovariateKind { Binary, Real };

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::Real;

  bool operator==(const CovariateSpec&) const = default;
};

struct Sample {
  std::string sample_id;
  std::string identity_id;
  LatentCode latent;
  Eigen::VectorXd facerec;  // recognition embedding
  int attribute = 0;        // binary matching attribute
  std::vector<double> covariates;  // aligned with Dataset::covariate_specs()
  bool default_attrs_ok = true;
};

/// Immutable, validated collection of samples sharing one latent shape and
/// one embedding length, indexed by sample id and by identity.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<CovariateSpec> covariate_specs, std::vector<Sample> samples);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  /// UnknownId when absent.
  const Sample& at(std::string_view sample_id) const;
  std::size_t index_of(std::string_view sample_id) const;
  bool contains(std::string_view sample_id) const;

  /// identity_id -> sample ids in dataset order.
  const std::map<std::string, std::vector<std::string>>& identity_index() const noexcept {
    return identity_index_;
  }

  const std::vector<CovariateSpec>& covariate_specs() const noexcept { return specs_; }
  std::optional<std::size_t> covariate_index(std::string_view name) const;
  /// Value of a named covariate; UnknownId for an unknown name.
  double covariate(const Sample& s, std::string_view name) const;

  int latent_levels() const noexcept { return levels_; }
  int latent_dims() const noexcept { return dims_; }
  int facerec_dim() const noexcept { return facerec_dim_; }

 private:
  std::vector<CovariateSpec> specs_;
  std::vector<Sample> samples_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::string>> identity_index_;
  int levels_ = 0;
  int dims_ = 0;
  int facerec_dim_ = 0;
};

/// Sample ids partitioned by attribute value, in dataset order.
std::pair<std::vector<std::string>, std::vector<std::string>> group_split(const Dataset& ds);

// Manifest CSV columns: sample_id, identity_id, attribute, default_attrs_ok,
// latent_path, facerec_path, then one "<name>:bin" or "<name>:real" column
// per covariate. Paths are relative to the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes <dir>/<manifest_name> plus latents/*.mlat and facerec/*.mfrv.
/// Payloads are float32, so saving then loading is exact for float32 data.
std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                   const std::string& manifest_name = "manifest.csv");

// Recognition vectors: "MFRV" + u32 length + float32 values, or CSV values.
void write_facerec(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_facerec(const std::filesystem::path& path);

}  // namespace matchlab
