#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "matchlab/dataset.hpp"
#include "matchlab/matching.hpp"

namespace matchlab {

/// Linear logistic model over restricted latent vectors.
struct PropensityModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double l2 = 0.0;

  /// sigmoid(weights . x + intercept); ShapeError on a length mismatch.
  double score(const Eigen::VectorXd& x) const;
};

struct LogisticConfig {
  double l2 = 1e-4;
  int max_iters = 5000;
  double tol = 1e-6;
  double step_size = 8.0;
};

double sigmoid(double z);

/// Mean cross-entropy + (l2/2)||w||^2 over params = [weights; intercept].
/// Writes the gradient when grad is non-null.
double logistic_objective(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                          const Eigen::VectorXd& params, double l2, Eigen::VectorXd* grad);

/// SingleClass when only one label value is present; NonFinite on bad input.
PropensityModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                             const LogisticConfig& cfg = {});

/// N x D matrix of restricted projections, in dataset order.
Eigen::MatrixXd restricted_features(const Dataset& ds);
std::vector<int> attribute_labels(const Dataset& ds);

std::map<std::string, double> propensity_scores(const PropensityModel& m, const Dataset& ds);

/// Fraction of rows where (score > 0.5) agrees with the label.
double classification_accuracy(const PropensityModel& m, const Eigen::MatrixXd& features,
                               const std::vector<int>& labels);

struct CrossValidation {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
  Eigen::VectorXd out_of_fold_scores;  // score of each row from the fold that held it out
};

/// Stratified k-fold: rows of each class are shuffled with `seed` and dealt
/// round-robin (continuing across classes) into folds. FoldDegenerate when a
/// fold is empty or its training part has a single class.
CrossValidation cross_validate(const Eigen::MatrixXd& features, const std::vector<int>& labels, int folds,
                               const LogisticConfig& cfg, std::uint64_t seed);

struct CaliperConfig {
  double caliper = 0.1;
  std::uint64_t seed = 0;
  MatchConstraints constraints;  // none by default
};

/// Walks the smaller attribute group in a seeded random order; each query
/// takes the unmatched opposite-group sample with the closest score and is
/// accepted when the gap is within the caliper, otherwise discarded.
MatchSet caliper_match(const std::map<std::string, double>& scores, const Dataset& ds, const CaliperConfig& cfg);

}  // namespace matchlab
