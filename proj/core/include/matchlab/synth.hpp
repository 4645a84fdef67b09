#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "matchlab/benchmark.hpp"
#include "matchlab/dataset.hpp"
#include "matchlab/disentangle.hpp"
#include "matchlab/matching.hpp"

namespace matchlab {

struct SynthConfig {
  int n = 2000;  // even; two samples per identity
  int levels = 4;
  int dims = 8;
  int n_attrs = 4;
  Eigen::MatrixXd attr_corr;  // empty means identity
  double confounder_strength = 1.0;
  double noise_sd = 0.5;  // attribute noise relative to the latent signal
  std::uint64_t seed = 0;

  double level_sd = 0.3;             // spread of expanded rows around the restricted vector
  double identity_share = 0.7;       // fraction of latent variance shared within an identity
  int treatment_index = 0;           // attribute column thresholded into the matching attribute
  int n_binary_covariates = 3;
  int n_real_covariates = 1;
  double covariate_noise_sd = 0.5;
  int facerec_dim = 128;
  double facerec_same_distance = 0.35;  // typical same-identity recognition distance
  double facerec_diff_distance = 1.0;   // typical different-identity recognition distance
  double default_attrs_rate = 0.9;

  /// InvalidArgument for out-of-range fields; NotPSD for an indefinite attr_corr.
  void validate() const;
  Eigen::MatrixXd resolved_corr() const;
};

struct GroundTruth {
  Eigen::MatrixXd restricted;     // N x D, row i = restricted projection of sample i
  AttributeMatrix attributes;     // N x N_A continuous attributes
  Eigen::MatrixXd basis;          // D x N_A orthonormal factor basis Q
  Eigen::MatrixXd corr_factor;    // C with C C^T = attr_corr
  Eigen::MatrixXd attr_map;       // M = Q C^T / sqrt(1 + noise^2), so A = Z M + eps
  Eigen::VectorXd treatment_direction;  // unit q_g; attribute = [A_g > 0]
  double noise_sd = 0.0;
  std::vector<std::string> confounded_covariates;
  std::vector<Eigen::VectorXd> covariate_directions;  // latent loading of each covariate

  /// P(attribute = 1 | restricted z) = Phi(z . q_g / noise_sd).
  double propensity(const Eigen::VectorXd& restricted_z) const;
};

struct SynthResult {
  Dataset dataset;
  GroundTruth truth;
};

/// Seed-deterministic confounded population. Latents and recognition vectors
/// are float32-rounded, so the dataset survives save_dataset/load_dataset exactly.
SynthResult generate(const SynthConfig& cfg);

struct EmbeddingSynthConfig {
  std::string model_name = "synthetic";
  int dim = 128;
  double base_distance = 0.5;
  double delta = 0.05;  // extra test-to-reference distance for the focus group
  int focus_group = 0;
  double jitter_sd = 0.02;
  double center_sd = 0.1;
  std::uint64_t seed = 0;
};

/// Recognition embeddings with a known per-group distance offset. Anchor
/// samples (the references of `matches`, or the first sample of each identity
/// when none are given) sit at their identity center; every other sample sits
/// at distance base + delta * [attribute == focus] + jitter from it.
EmbeddingTable synth_embeddings(const Dataset& ds, const EmbeddingSynthConfig& cfg, const MatchSet* matches = nullptr);

}  // namespace matchlab
