#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "matchlab/dataset.hpp"

namespace matchlab::testing {

inline Sample make_sample(std::string id, std::string identity, int attribute, Eigen::MatrixXd latent,
                          Eigen::VectorXd facerec, std::vector<double> covariates = {}, bool default_ok = true) {
  Sample s;
  s.sample_id = std::move(id);
  s.identity_id = std::move(identity);
  s.attribute = attribute;
  s.latent = LatentCode(std::move(latent));
  s.facerec = std::move(facerec);
  s.covariates = std::move(covariates);
  s.default_attrs_ok = default_ok;
  return s;
}

/// 1 x 1 latent holding `x` and a 1-d recognition vector holding `f`.
inline Sample scalar_sample(std::string id, std::string identity, int attribute, double x, double f = 0.0,
                            std::vector<double> covariates = {}, bool default_ok = true) {
  return make_sample(std::move(id), std::move(identity), attribute, Eigen::MatrixXd::Constant(1, 1, x),
                     Eigen::VectorXd::Constant(1, f), std::move(covariates), default_ok);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

struct RandomDatasetSpec {
  int n = 20;
  int identities = 8;
  int levels = 2;
  int dims = 3;
  int facerec_dim = 4;
  double default_ok_rate = 0.8;
  bool integer_latents = false;  // small integers, so distance ties occur
};

/// Random samples with ids "s00".."sNN" assigned to identities at random.
inline Dataset random_dataset(const RandomDatasetSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> identity(0, spec.identities - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> small(-2, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Sample> samples;
  for (int i = 0; i < spec.n; ++i) {
    Eigen::MatrixXd latent = random_matrix(spec.levels, spec.dims, rng);
    if (spec.integer_latents) latent = latent.unaryExpr([&](double) { return static_cast<double>(small(rng)); });
    char id[16];
    std::snprintf(id, sizeof id, "s%02d", i);
    samples.push_back(make_sample(id, "p" + std::to_string(identity(rng)), coin(rng), latent,
                                  random_matrix(spec.facerec_dim, 1, rng, 0.5).col(0), {},
                                  u(rng) < spec.default_ok_rate));
  }
  return Dataset({}, std::move(samples));
}

}  // namespace matchlab::testing
