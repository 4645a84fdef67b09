#include "matchlab/synth.hpp"

#include <cmath>
#include <random>
#include <set>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "matchlab/error.hpp"
#include "matchlab/io.hpp"

namespace matchlab {
namespace {

std::string padded(const char* prefix, int value, int width) {
  std::string digits = std::to_string(value);
  return prefix + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(digits.size()))), '0') +
         digits;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

Eigen::VectorXd gaussian_vector(Eigen::Index n, std::mt19937_64& rng) { return gaussian_matrix(n, 1, rng).col(0); }

/// C with C C^T = R. Cholesky when R is positive definite, otherwise the
/// symmetric square root through the eigendecomposition.
Eigen::MatrixXd corr_factor(const Eigen::MatrixXd& r) {
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

Eigen::MatrixXd SynthConfig::resolved_corr() const {
  if (attr_corr.size() == 0) return Eigen::MatrixXd::Identity(n_attrs, n_attrs);
  return attr_corr;
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(n >= 2 && n % 2 == 0, "n must be a positive even number (two samples per identity)");
  require(levels >= 1 && dims >= 2, "latent shape needs levels >= 1 and dims >= 2");
  require(n_attrs >= 1 && n_attrs <= dims, "n_attrs must lie in [1, dims]");
  require(treatment_index >= 0 && treatment_index < n_attrs, "treatment_index out of range");
  require(confounder_strength >= 0.0 && std::isfinite(confounder_strength), "confounder_strength must be >= 0");
  require(noise_sd >= 0.0 && std::isfinite(noise_sd), "noise_sd must be >= 0");
  require(level_sd >= 0.0 && std::isfinite(level_sd), "level_sd must be >= 0");
  require(identity_share >= 0.0 && identity_share <= 1.0, "identity_share must lie in [0, 1]");
  require(n_binary_covariates >= 0 && n_real_covariates >= 0, "covariate counts must be >= 0");
  require(covariate_noise_sd >= 0.0 && std::isfinite(covariate_noise_sd), "covariate_noise_sd must be >= 0");
  require(facerec_dim >= 1, "facerec_dim must be positive");
  require(facerec_same_distance > 0.0 && facerec_diff_distance > facerec_same_distance,
          "recognition distances need 0 < same < diff");
  require(default_attrs_rate >= 0.0 && default_attrs_rate <= 1.0, "default_attrs_rate must lie in [0, 1]");

  const Eigen::MatrixXd r = resolved_corr();
  require(r.rows() == n_attrs && r.cols() == n_attrs, "attr_corr must be n_attrs x n_attrs");
  require(r.allFinite(), "attr_corr must be finite");
  require((r - r.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "attr_corr must be symmetric");
  require((r.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12, "attr_corr must have a unit diagonal");
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(r, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -1e-10) {
    throw Error(ErrorCode::NotPSD, "attr_corr has negative eigenvalue " + io::format_double(min_eig));
  }
}

double GroundTruth::propensity(const Eigen::VectorXd& restricted_z) const {
  const double signal = restricted_z.dot(treatment_direction);
  if (noise_sd == 0.0) return signal > 0.0 ? 1.0 : (signal < 0.0 ? 0.0 : 0.5);
  return normal_cdf(signal / noise_sd);
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const int d = cfg.dims;
  const int na = cfg.n_attrs;
  const double sigma = cfg.noise_sd;

  GroundTruth truth;
  truth.noise_sd = sigma;
  truth.corr_factor = corr_factor(cfg.resolved_corr());
  truth.basis = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(d, na, rng)).householderQ() *
                Eigen::MatrixXd::Identity(d, na);
  truth.attr_map = truth.basis * truth.corr_factor.transpose() / std::sqrt(1.0 + sigma * sigma);
  truth.treatment_direction = truth.basis * truth.corr_factor.row(cfg.treatment_index).transpose();
  const Eigen::VectorXd& qg = truth.treatment_direction;

  std::vector<CovariateSpec> specs;
  for (int k = 0; k < cfg.n_binary_covariates; ++k) specs.push_back({"bin" + std::to_string(k), CovariateKind::Binary});
  for (int k = 0; k < cfg.n_real_covariates; ++k) specs.push_back({"real" + std::to_string(k), CovariateKind::Real});
  for (std::size_t k = 0; k < specs.size(); ++k) {
    Eigen::VectorXd p = gaussian_vector(d, rng);
    p -= p.dot(qg) * qg;
    p.normalize();
    truth.covariate_directions.push_back(cfg.confounder_strength * qg + p);
    if (cfg.confounder_strength > 0.0) truth.confounded_covariates.push_back(specs[k].name);
  }

  // Identity centers of the recognition space follow the identity latent, so
  // similar-looking identities are also close under recognition distance.
  const double f = cfg.facerec_dim;
  const double noise_entry = cfg.facerec_same_distance / std::sqrt(2.0 * f);
  const double center_entry =
      std::sqrt(std::max(0.0, cfg.facerec_diff_distance * cfg.facerec_diff_distance / (2.0 * f) - noise_entry * noise_entry));
  const Eigen::MatrixXd facerec_map = gaussian_matrix(cfg.facerec_dim, d, rng) * (center_entry / std::sqrt(d));

  const int n = cfg.n;
  const int width = static_cast<int>(std::to_string(n - 1).size());
  const double shared = std::sqrt(cfg.identity_share);
  const double own = std::sqrt(1.0 - cfg.identity_share);
  const double attr_scale = 1.0 / std::sqrt(1.0 + sigma * sigma);

  truth.restricted.resize(n, d);
  truth.attributes.values.resize(n, na);
  for (int k = 0; k < na; ++k) truth.attributes.names.push_back("attr" + std::to_string(k));

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd z_id;
  Eigen::VectorXd center;
  for (int i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      z_id = gaussian_vector(d, rng);
      center = facerec_map * z_id;
    }
    const Eigen::VectorXd z = shared * z_id + own * gaussian_vector(d, rng);

    Eigen::MatrixXd level_noise = gaussian_matrix(cfg.levels, d, rng) * cfg.level_sd;
    level_noise.rowwise() -= level_noise.colwise().mean();
    Eigen::MatrixXd expanded = level_noise.rowwise() + z.transpose();
    expanded = expanded.unaryExpr([](double v) { return io::to_f32(v); });
    LatentCode code(std::move(expanded));
    const Eigen::VectorXd zbar = restricted_projection(code);
    truth.restricted.row(i) = zbar.transpose();

    const Eigen::RowVectorXd u = zbar.transpose() * truth.basis;
    const Eigen::RowVectorXd eta = gaussian_vector(na, rng).transpose();
    const Eigen::RowVectorXd a = (u + sigma * eta) * truth.corr_factor.transpose() * attr_scale;
    truth.attributes.values.row(i) = a;

    Sample s;
    s.sample_id = padded("s", i, width);
    s.identity_id = padded("id", i / 2, width);
    s.latent = std::move(code);
    s.attribute = a[cfg.treatment_index] > 0.0 ? 1 : 0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const double score = zbar.dot(truth.covariate_directions[k]) + cfg.covariate_noise_sd * normal(rng);
      s.covariates.push_back(specs[k].kind == CovariateKind::Binary ? (score > 0.0 ? 1.0 : 0.0) : score);
    }
    Eigen::VectorXd fr = center + noise_entry * gaussian_vector(cfg.facerec_dim, rng);
    s.facerec = fr.unaryExpr([](double v) { return io::to_f32(v); });
    s.default_attrs_ok = uniform(rng) < cfg.default_attrs_rate;
    samples.push_back(std::move(s));
  }
  return {Dataset(std::move(specs), std::move(samples)), std::move(truth)};
}

EmbeddingTable synth_embeddings(const Dataset& ds, const EmbeddingSynthConfig& cfg, const MatchSet* matches) {
  if (cfg.dim < 2) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 2");
  if (cfg.focus_group != 0 && cfg.focus_group != 1) throw Error(ErrorCode::InvalidArgument, "focus group must be 0 or 1");
  if (!(cfg.base_distance > 0.0) || cfg.jitter_sd < 0.0 || cfg.center_sd < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "embedding distances must be positive");
  }
  std::set<std::string> anchors;
  if (matches) {
    for (const auto& p : matches->pairs) {
      if (p.ref_a) anchors.insert(*p.ref_a);
      if (p.ref_b) anchors.insert(*p.ref_b);
    }
  }
  std::map<std::string, std::string> anchor_of;  // identity -> anchor sample
  for (const auto& [identity, ids] : ds.identity_index()) {
    std::string chosen = ids.front();
    for (const auto& id : ids) {
      if (anchors.count(id)) {
        chosen = id;
        break;
      }
    }
    anchor_of[identity] = chosen;
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::map<std::string, Eigen::VectorXd> centers;
  for (const auto& [identity, ids] : ds.identity_index()) {
    (void)ids;
    centers[identity] = gaussian_vector(cfg.dim, rng) * cfg.center_sd;
  }
  std::map<std::string, Eigen::VectorXd> vectors;
  for (const auto& s : ds.samples()) {
    const Eigen::VectorXd& c = centers.at(s.identity_id);
    if (anchor_of.at(s.identity_id) == s.sample_id) {
      vectors[s.sample_id] = c;
      continue;
    }
    const Eigen::VectorXd dir = gaussian_vector(cfg.dim, rng).normalized();
    const double r = cfg.base_distance + (s.attribute == cfg.focus_group ? cfg.delta : 0.0) + cfg.jitter_sd * normal(rng);
    vectors[s.sample_id] = c + std::max(0.0, r) * dir;
  }
  return EmbeddingTable(cfg.model_name, std::move(vectors));
}

}  // namespace matchlab
