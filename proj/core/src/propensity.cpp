#include "matchlab/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include "matchlab/error.hpp"
#include "matchlab/io.hpp"
#include "matchlab/optim.hpp"

namespace matchlab {
namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_inputs(const Eigen::MatrixXd& features, const std::vector<int>& labels) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error(ErrorCode::ShapeError, "features and labels differ in length");
  }
  if (!features.allFinite()) throw Error(ErrorCode::NonFinite, "features contain NaN/Inf");
  std::size_t ones = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    ones += static_cast<std::size_t>(y);
  }
  if (labels.size() < 2 || ones == 0 || ones == labels.size()) {
    throw Error(ErrorCode::SingleClass, "logistic regression needs both labels present");
  }
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double PropensityModel::score(const Eigen::VectorXd& x) const {
  if (x.size() != weights.size()) {
    throw Error(ErrorCode::ShapeError, "feature length " + std::to_string(x.size()) + " != model length " +
                                           std::to_string(weights.size()));
  }
  return sigmoid(weights.dot(x) + intercept);
}

double logistic_objective(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                          const Eigen::VectorXd& params, double l2, Eigen::VectorXd* grad) {
  const Eigen::Index d = features.cols();
  const auto w = params.head(d);
  const double b = params[d];
  const Eigen::VectorXd z = (features * w).array() + b;
  const double n = static_cast<double>(features.rows());
  double loss = 0.0;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)];
    loss += softplus(z[i]) - y * z[i];
    residual[i] = sigmoid(z[i]) - y;
  }
  loss = loss / n + 0.5 * l2 * w.squaredNorm();
  if (grad) {
    grad->resize(d + 1);
    grad->head(d) = features.transpose() * residual / n + l2 * w;
    (*grad)[d] = residual.sum() / n;
  }
  return loss;
}

PropensityModel fit_logistic(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                             const LogisticConfig& cfg) {
  check_inputs(features, labels);
  if (cfg.l2 < 0.0 || !std::isfinite(cfg.l2)) throw Error(ErrorCode::InvalidArgument, "l2 must be >= 0");
  optim::Objective objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
    return logistic_objective(features, labels, p, cfg.l2, g);
  };
  optim::DescentConfig dc;
  dc.step_size = cfg.step_size;
  dc.max_iters = cfg.max_iters;
  dc.grad_tolerance = cfg.tol;
  dc.nonfinite_code = ErrorCode::NonFinite;
  const auto res = optim::gradient_descent(objective, Eigen::VectorXd::Zero(features.cols() + 1), dc);
  PropensityModel m;
  m.weights = res.x.head(features.cols());
  m.intercept = res.x[features.cols()];
  m.l2 = cfg.l2;
  if (!m.weights.allFinite() || !std::isfinite(m.intercept)) {
    throw Error(ErrorCode::NonFinite, "logistic fit produced non-finite parameters");
  }
  return m;
}

Eigen::MatrixXd restricted_features(const Dataset& ds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.size()), ds.latent_dims());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = restricted_projection(ds[i].latent).transpose();
  }
  return x;
}

std::vector<int> attribute_labels(const Dataset& ds) {
  std::vector<int> y;
  y.reserve(ds.size());
  for (const auto& s : ds.samples()) y.push_back(s.attribute);
  return y;
}

std::map<std::string, double> propensity_scores(const PropensityModel& m, const Dataset& ds) {
  std::map<std::string, double> out;
  for (const auto& s : ds.samples()) out.emplace(s.sample_id, m.score(restricted_projection(s.latent)));
  return out;
}

double classification_accuracy(const PropensityModel& m, const Eigen::MatrixXd& features,
                               const std::vector<int>& labels) {
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const int predicted = m.score(features.row(i).transpose()) > 0.5 ? 1 : 0;
    correct += predicted == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

CrossValidation cross_validate(const Eigen::MatrixXd& features, const std::vector<int>& labels, int folds,
                               const LogisticConfig& cfg, std::uint64_t seed) {
  check_inputs(features, labels);
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");
  const std::size_t n = labels.size();

  std::mt19937_64 rng(seed);
  std::vector<int> fold_of(n, 0);
  std::size_t dealt = 0;
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == cls) rows.push_back(i);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto r : rows) fold_of[r] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
  }

  CrossValidation cv;
  cv.out_of_fold_scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
    std::vector<int> train_y;
    std::vector<int> test_y;
    for (auto i : train) train_y.push_back(labels[i]);
    for (auto i : test) test_y.push_back(labels[i]);
    const auto ones = std::count(train_y.begin(), train_y.end(), 1);
    if (test.empty() || ones == 0 || ones == static_cast<std::ptrdiff_t>(train_y.size())) {
      throw Error(ErrorCode::FoldDegenerate, "fold " + std::to_string(f) + " is empty or single-class");
    }
    const auto model = fit_logistic(select_rows(features, train), train_y, cfg);
    const Eigen::MatrixXd test_x = select_rows(features, test);
    cv.fold_accuracy.push_back(classification_accuracy(model, test_x, test_y));
    for (std::size_t k = 0; k < test.size(); ++k) {
      cv.out_of_fold_scores[static_cast<Eigen::Index>(test[k])] =
          model.score(test_x.row(static_cast<Eigen::Index>(k)).transpose());
    }
  }
  double sum = 0.0;
  for (double a : cv.fold_accuracy) sum += a;
  cv.mean_accuracy = sum / static_cast<double>(folds);
  return cv;
}

MatchSet caliper_match(const std::map<std::string, double>& scores, const Dataset& ds, const CaliperConfig& cfg) {
  if (!(cfg.caliper > 0.0)) throw Error(ErrorCode::InvalidArgument, "caliper must be positive");
  validate(cfg.constraints);
  for (const auto& s : ds.samples()) {
    if (!scores.count(s.sample_id)) throw Error(ErrorCode::UnknownId, "no propensity score for " + s.sample_id);
  }
  auto [group0, group1] = group_split(ds);
  if (group0.empty() || group1.empty()) throw Error(ErrorCode::EmptyGroup, "caliper matching needs both groups");

  // Ties in group size iterate attribute 0.
  const bool queries_are_group0 = group0.size() <= group1.size();
  std::vector<std::string> queries = queries_are_group0 ? group0 : group1;
  std::vector<std::string> pool = queries_are_group0 ? group1 : group0;
  std::sort(queries.begin(), queries.end());
  std::sort(pool.begin(), pool.end());
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(queries.begin(), queries.end(), rng);

  const auto& c = cfg.constraints;
  std::unordered_set<std::string> used;
  std::vector<char> taken(pool.size(), 0);
  MatchSet ms;
  for (const auto& qid : queries) {
    if (used.count(qid)) continue;
    const Sample& q = ds.at(qid);
    const double qs = scores.at(qid);
    if (c.require_references && reference_candidates(q, ds, c, used).empty()) continue;
    std::size_t best = pool.size();
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (taken[j] || used.count(pool[j])) continue;
      const Sample& s = ds.at(pool[j]);
      if (c.facerec_threshold && facerec_distance(q, s) > *c.facerec_threshold) continue;
      if (c.require_references &&
          (s.identity_id == q.identity_id || reference_candidates(s, ds, c, used).empty())) {
        continue;
      }
      const double gap = std::abs(qs - scores.at(pool[j]));
      if (gap < best_gap) {  // pool is sorted, so the first minimum has the smallest id
        best_gap = gap;
        best = j;
      }
    }
    if (best == pool.size() || best_gap > cfg.caliper) continue;  // discard the query
    const std::string& mid = pool[best];
    MatchPair pair;
    pair.id_a = queries_are_group0 ? qid : mid;
    pair.id_b = queries_are_group0 ? mid : qid;
    pair.distance = best_gap;
    taken[best] = 1;
    used.insert(qid);
    used.insert(mid);
    if (c.require_references) {
      auto refs = select_references(pair, ds, facerec_distance, c, used);
      pair.ref_a = refs.first;
      pair.ref_b = refs.second;
      used.insert(*pair.ref_a);
      used.insert(*pair.ref_b);
    }
    ms.pairs.push_back(std::move(pair));
  }

  ms.provenance["method"] = "propensity_caliper";
  ms.provenance["caliper"] = io::format_double(cfg.caliper);
  ms.provenance["seed"] = std::to_string(cfg.seed);
  ms.provenance["query_group"] = queries_are_group0 ? "0" : "1";
  ms.provenance["facerec_threshold"] = c.facerec_threshold ? io::format_double(*c.facerec_threshold) : "none";
  ms.provenance["require_references"] = c.require_references ? "true" : "false";
  return ms;
}

}  // namespace matchlab
