#include "matchlab/disentangle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "matchlab/error.hpp"
#include "matchlab/optim.hpp"

namespace matchlab {
namespace {

constexpr double kRankTolerance = 1e-10;

bool degenerate_variance(double ss, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const double scale = x.cwiseAbs().maxCoeff();
  return !(ss > static_cast<double>(x.size()) * std::pow(1e-12 * scale, 2)) || scale == 0.0;
}

/// Pearson correlation of two columns restricted to mask rows, plus the
/// partial derivatives with respect to each column when requested.
struct PearsonEval {
  double rho = 0.0;
  Eigen::VectorXd dx;  // aligned with the selected rows
  Eigen::VectorXd dy;
};

PearsonEval pearson_with_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& y, bool want_grad) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::ShapeError, "pearson needs two vectors of equal length >= 2");
  }
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (degenerate_variance(sxx, x) || degenerate_variance(syy, y)) {
    throw Error(ErrorCode::ZeroVariance, "correlation of a constant vector is undefined");
  }
  const double norm = std::sqrt(sxx * syy);
  PearsonEval ev;
  ev.rho = std::clamp(xc.dot(yc) / norm, -1.0, 1.0);
  if (want_grad) {
    ev.dx = yc / norm - ev.rho * xc / sxx;
    ev.dy = xc / norm - ev.rho * yc / syy;
  }
  return ev;
}

std::vector<Eigen::Index> mask_rows(const std::vector<char>& mask, Eigen::Index n) {
  std::vector<Eigen::Index> rows;
  if (mask.empty()) {
    rows.resize(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  } else {
    for (Eigen::Index r = 0; r < n; ++r)
      if (mask[static_cast<std::size_t>(r)]) rows.push_back(r);
  }
  return rows;
}

Eigen::VectorXd gather(const Eigen::MatrixXd& m, Eigen::Index col, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out[static_cast<Eigen::Index>(k)] = m(rows[k], col);
  return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Sum of |rho_ij - rho*_ij| over i > j, accumulating the gradient into grad.
double correlation_penalty(const Eigen::MatrixXd& pred, const CorrelationPrior* prior, Eigen::MatrixXd* grad) {
  if (prior) prior->validate(static_cast<int>(pred.cols()), static_cast<std::size_t>(pred.rows()));
  double total = 0.0;
  for (Eigen::Index i = 1; i < pred.cols(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const CorrelationTarget* target = prior ? prior->find(static_cast<int>(i), static_cast<int>(j)) : nullptr;
      const double rho_star = target ? target->rho : 0.0;
      const auto rows = mask_rows(target ? target->mask : std::vector<char>{}, pred.rows());
      const auto ev = pearson_with_grad(gather(pred, i, rows), gather(pred, j, rows), grad != nullptr);
      const double dev = ev.rho - rho_star;
      total += std::abs(dev);
      if (grad) {
        const double s = sign(dev);
        if (s == 0.0) continue;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          (*grad)(rows[k], i) += s * ev.dx[static_cast<Eigen::Index>(k)];
          (*grad)(rows[k], j) += s * ev.dy[static_cast<Eigen::Index>(k)];
        }
      }
    }
  }
  return total;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

double safe_pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  try {
    return pearson(x, y);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double safe_spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  try {
    return spearman(x, y);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

void AttributeMatrix::validate() const {
  if (values.rows() < 2) throw Error(ErrorCode::ShapeError, "attribute matrix needs N >= 2 rows");
  if (values.cols() != static_cast<Eigen::Index>(names.size())) {
    throw Error(ErrorCode::ShapeError, "attribute names do not match the column count");
  }
  if (!values.allFinite()) throw Error(ErrorCode::NonFinite, "attribute matrix has non-finite entries");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw Error(ErrorCode::DuplicateId, "attribute names must be unique");
}

const CorrelationTarget* CorrelationPrior::find(int i, int j) const {
  for (const auto& t : targets) {
    if ((t.i == i && t.j == j) || (t.i == j && t.j == i)) return &t;
  }
  return nullptr;
}

void CorrelationPrior::validate(int n_attrs, std::size_t n_rows) const {
  for (std::size_t a = 0; a < targets.size(); ++a) {
    const auto& t = targets[a];
    if (t.i == t.j || t.i < 0 || t.j < 0 || t.i >= n_attrs || t.j >= n_attrs) {
      throw Error(ErrorCode::InvalidArgument, "prior target indices must be distinct attribute columns");
    }
    if (!(std::abs(t.rho) <= 1.0)) throw Error(ErrorCode::InvalidArgument, "prior correlation must lie in [-1, 1]");
    if (!t.mask.empty() && t.mask.size() != n_rows) {
      throw Error(ErrorCode::ShapeError, "prior mask length does not match the number of rows");
    }
    for (std::size_t b = 0; b < a; ++b) {
      const auto& u = targets[b];
      if ((u.i == t.i && u.j == t.j) || (u.i == t.j && u.j == t.i)) {
        throw Error(ErrorCode::DuplicateId, "prior specifies the same pair twice");
      }
    }
  }
}

CorrelationPrior CorrelationPrior::subset(const std::vector<std::size_t>& rows) const {
  CorrelationPrior out = *this;
  for (auto& t : out.targets) {
    if (t.mask.empty()) continue;
    std::vector<char> m;
    m.reserve(rows.size());
    for (auto r : rows) m.push_back(t.mask.at(r));
    t.mask = std::move(m);
  }
  return out;
}

double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  return pearson_with_grad(x, y, false).rho;
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index start = 0; start < n;) {
    Eigen::Index end = start + 1;
    while (end < n && x[order[static_cast<std::size_t>(end)]] == x[order[static_cast<std::size_t>(start)]]) ++end;
    const double avg = 0.5 * static_cast<double>(start + end - 1) + 1.0;
    for (Eigen::Index k = start; k < end; ++k) ranks[order[static_cast<std::size_t>(k)]] = avg;
    start = end;
  }
  return ranks;
}

double spearman(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::ShapeError, "spearman needs equal lengths");
  return pearson(average_ranks(x), average_ranks(y));
}

double correlation_term(const Eigen::MatrixXd& predicted, const CorrelationPrior* prior) {
  return correlation_penalty(predicted, prior, nullptr);
}

LossTerms disentangle_loss(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& predicted, double lambda,
                           const CorrelationPrior* prior, bool squared_mse, Eigen::MatrixXd* grad) {
  if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
    throw Error(ErrorCode::ShapeError, "truth and prediction shapes differ");
  }
  if (lambda < 0.0 || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  const Eigen::MatrixXd residual = predicted - truth;
  LossTerms terms;
  const double sq = residual.squaredNorm();
  terms.mse_term = squared_mse ? sq : std::sqrt(sq);
  if (grad) {
    if (squared_mse) {
      *grad = 2.0 * residual;
    } else {
      *grad = terms.mse_term > 0.0 ? Eigen::MatrixXd(residual / terms.mse_term)
                                   : Eigen::MatrixXd::Zero(residual.rows(), residual.cols());
    }
  }
  if (lambda > 0.0) {
    Eigen::MatrixXd corr_grad;
    if (grad) corr_grad = Eigen::MatrixXd::Zero(predicted.rows(), predicted.cols());
    terms.corr_term = correlation_penalty(predicted, prior, grad ? &corr_grad : nullptr);
    if (grad) *grad += lambda * corr_grad;
  }
  terms.total = terms.mse_term + lambda * terms.corr_term;
  return terms;
}

// --- AttributeMapper ---------------------------------------------------------

AttributeMapper AttributeMapper::linear(int n_inputs, int n_outputs, std::uint64_t seed) {
  if (n_inputs < 1 || n_outputs < 1) throw Error(ErrorCode::InvalidArgument, "mapper dims must be positive");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_inputs));
  std::uniform_real_distribution<double> u(-bound, bound);
  Layer l{Eigen::MatrixXd(n_outputs, n_inputs), Eigen::VectorXd(n_outputs)};
  for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = u(rng);
  return AttributeMapper(MapperKind::Linear, {std::move(l)});
}

AttributeMapper AttributeMapper::mlp(int n_inputs, int n_outputs, int hidden, std::uint64_t seed) {
  if (n_inputs < 1 || n_outputs < 1 || hidden < 1) {
    throw Error(ErrorCode::InvalidArgument, "mapper dims must be positive");
  }
  std::mt19937_64 rng(seed);
  const int widths[] = {n_inputs, hidden, hidden, n_outputs};
  std::vector<Layer> layers;
  for (int k = 0; k < 3; ++k) {
    // Uniform fan-in scaling.
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer l{Eigen::MatrixXd(widths[k + 1], widths[k]), Eigen::VectorXd(widths[k + 1])};
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = u(rng);
    layers.push_back(std::move(l));
  }
  return AttributeMapper(MapperKind::Mlp, std::move(layers));
}

AttributeMapper AttributeMapper::from_linear(Eigen::MatrixXd weights, Eigen::VectorXd bias) {
  if (weights.rows() != bias.size() || weights.size() == 0) {
    throw Error(ErrorCode::ShapeError, "linear mapper needs an N_A x N_Z weight matrix and N_A biases");
  }
  if (!weights.allFinite() || !bias.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite mapper parameters");
  return AttributeMapper(MapperKind::Linear, {Layer{std::move(weights), std::move(bias)}});
}

int AttributeMapper::input_dim() const noexcept { return static_cast<int>(layers_.front().weights.cols()); }
int AttributeMapper::output_dim() const noexcept { return static_cast<int>(layers_.back().weights.rows()); }

Eigen::MatrixXd AttributeMapper::predict(const Eigen::MatrixXd& z) const {
  if (z.cols() != input_dim()) throw Error(ErrorCode::ShapeError, "input width does not match the mapper");
  Eigen::MatrixXd x = z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd pre = x * layers_[l].weights.transpose();
    pre.rowwise() += layers_[l].bias.transpose();
    x = (l + 1 < layers_.size()) ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : std::move(pre);
  }
  return x;
}

Eigen::VectorXd AttributeMapper::predict_one(const Eigen::VectorXd& z) const {
  return predict(z.transpose()).row(0).transpose();
}

std::size_t AttributeMapper::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::VectorXd AttributeMapper::parameters() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    p.segment(k, l.weights.size()) = Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
    k += l.weights.size();
    p.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return p;
}

void AttributeMapper::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw Error(ErrorCode::ShapeError, "parameter vector length mismatch");
  }
  Eigen::Index k = 0;
  for (auto& l : layers_) {
    Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) = params.segment(k, l.weights.size());
    k += l.weights.size();
    l.bias = params.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

Eigen::VectorXd AttributeMapper::backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d_prediction) const {
  // Forward pass keeping every layer input and pre-activation.
  std::vector<Eigen::MatrixXd> inputs{z};
  std::vector<Eigen::MatrixXd> pres;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd pre = inputs.back() * layers_[l].weights.transpose();
    pre.rowwise() += layers_[l].bias.transpose();
    if (l + 1 < layers_.size()) inputs.push_back(pre.cwiseMax(0.0));
    pres.push_back(std::move(pre));
  }
  Eigen::VectorXd grad(static_cast<Eigen::Index>(parameter_count()));
  std::vector<Eigen::Index> offsets;
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    offsets.push_back(k);
    k += l.weights.size() + l.bias.size();
  }
  Eigen::MatrixXd g = d_prediction;
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const auto& layer = layers_[idx];
    const Eigen::MatrixXd dw = g.transpose() * inputs[idx];
    grad.segment(offsets[idx], dw.size()) = Eigen::Map<const Eigen::VectorXd>(dw.data(), dw.size());
    grad.segment(offsets[idx] + dw.size(), layer.bias.size()) = g.colwise().sum().transpose();
    if (idx > 0) {
      g = (g * layer.weights).cwiseProduct((pres[idx - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

const Eigen::MatrixXd& AttributeMapper::linear_weights() const {
  if (kind_ != MapperKind::Linear) throw Error(ErrorCode::InvalidArgument, "mapper is not linear");
  return layers_.front().weights;
}

const Eigen::VectorXd& AttributeMapper::linear_bias() const {
  if (kind_ != MapperKind::Linear) throw Error(ErrorCode::InvalidArgument, "mapper is not linear");
  return layers_.front().bias;
}

// --- training ------------------------------------------------------------

SplitMetrics evaluate_mapper(const AttributeMapper& mapper, const Eigen::MatrixXd& z, const AttributeMatrix& a,
                             const std::vector<std::size_t>& rows) {
  const Eigen::MatrixXd zs = select_rows(z, rows);
  const Eigen::MatrixXd truth = select_rows(a.values, rows);
  const Eigen::MatrixXd pred = mapper.predict(zs);
  SplitMetrics m;
  m.mse = (pred - truth).squaredNorm() / static_cast<double>(pred.size());
  double sum = 0.0;
  int pairs = 0;
  for (Eigen::Index i = 1; i < pred.cols(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      sum += std::abs(safe_pearson(pred.col(i), pred.col(j)));
      ++pairs;
    }
  }
  m.mean_abs_corr = pairs ? sum / pairs : 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    m.pearson.push_back(safe_pearson(pred.col(c), truth.col(c)));
    m.spearman.push_back(safe_spearman(pred.col(c), truth.col(c)));
  }
  return m;
}

TrainResult train_mapper(const Eigen::MatrixXd& z, const AttributeMatrix& a, const TrainConfig& cfg) {
  a.validate();
  if (z.rows() != a.values.rows()) throw Error(ErrorCode::ShapeError, "Z and A differ in row count");
  if (!z.allFinite()) throw Error(ErrorCode::NonFinite, "Z has non-finite entries");
  if (cfg.lambda < 0.0 || !std::isfinite(cfg.lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  const auto n = static_cast<std::size_t>(z.rows());
  cfg.prior.validate(static_cast<int>(a.values.cols()), n);

  const std::size_t train_n =
      cfg.train_n.value_or(static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n))));
  const std::size_t test_n = cfg.test_n.value_or(n >= train_n ? n - train_n : 0);
  if (train_n < 2 || test_n < 2 || train_n + test_n > n) {
    throw Error(ErrorCode::InvalidArgument, "train/test split must be disjoint with at least 2 rows each");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  TrainResult out;
  out.train_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_n));
  out.test_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_n),
                       perm.begin() + static_cast<std::ptrdiff_t>(train_n + test_n));

  const std::uint64_t init_seed = rng();
  AttributeMapper mapper =
      cfg.kind == MapperKind::Linear
          ? AttributeMapper::linear(static_cast<int>(z.cols()), static_cast<int>(a.values.cols()), init_seed)
          : AttributeMapper::mlp(static_cast<int>(z.cols()), static_cast<int>(a.values.cols()), cfg.hidden, init_seed);

  const Eigen::MatrixXd z_train = select_rows(z, out.train_rows);
  const Eigen::MatrixXd a_train = select_rows(a.values, out.train_rows);
  const CorrelationPrior prior = cfg.prior.subset(out.train_rows);
  const CorrelationPrior* prior_ptr = prior.targets.empty() ? nullptr : &prior;

  AttributeMapper work = mapper;
  optim::Objective objective = [&](const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
    work.set_parameters(params);
    const Eigen::MatrixXd pred = work.predict(z_train);
    if (!grad) {
      if (!pred.allFinite()) return std::numeric_limits<double>::infinity();
      return disentangle_loss(a_train, pred, cfg.lambda, prior_ptr, cfg.squared_mse).total;
    }
    Eigen::MatrixXd d_pred;
    const double total = disentangle_loss(a_train, pred, cfg.lambda, prior_ptr, cfg.squared_mse, &d_pred).total;
    *grad = work.backward(z_train, d_pred);
    return total;
  };
  optim::DescentConfig dc;
  dc.step_size = cfg.step_size;
  dc.max_iters = cfg.max_iters;
  dc.grad_tolerance = cfg.grad_tolerance;
  dc.nonfinite_code = ErrorCode::NonFinite;
  const auto res = optim::gradient_descent(objective, mapper.parameters(), dc);
  mapper.set_parameters(res.x);

  out.mapper = mapper;
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.stalled = res.stalled;
  out.final_loss = disentangle_loss(a_train, mapper.predict(z_train), cfg.lambda, prior_ptr, cfg.squared_mse);
  out.train = evaluate_mapper(mapper, z, a, out.train_rows);
  out.test = evaluate_mapper(mapper, z, a, out.test_rows);
  return out;
}

std::vector<TrainResult> lambda_sweep(const Eigen::MatrixXd& z, const AttributeMatrix& a, TrainConfig cfg,
                                      const std::vector<double>& lambdas) {
  std::vector<TrainResult> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    cfg.lambda = lambda;
    out.push_back(train_mapper(z, a, cfg));
  }
  return out;
}

Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd q = rows;
  for (Eigen::Index k = 0; k < q.rows(); ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < k; ++j) q.row(k) -= q.row(j).dot(q.row(k)) * q.row(j);
    }
    const double norm = q.row(k).norm();
    if (!(norm >= kRankTolerance)) {
      throw Error(ErrorCode::RankDeficient, "row " + std::to_string(k) + " is linearly dependent on earlier rows");
    }
    q.row(k) /= norm;
  }
  return q;
}

AttributeMapper orthogonalize(const AttributeMapper& linear) {
  return AttributeMapper::from_linear(gram_schmidt(linear.linear_weights()), linear.linear_bias());
}

Eigen::VectorXd edit_direction(const Eigen::VectorXd& z, const AttributeMapper& mapper, int attr_index,
                               double delta) {
  const Eigen::MatrixXd& w = mapper.linear_weights();
  if (attr_index < 0 || attr_index >= w.rows()) throw Error(ErrorCode::InvalidArgument, "attribute index out of range");
  if (z.size() != w.cols()) throw Error(ErrorCode::ShapeError, "latent length does not match the mapper");
  const Eigen::VectorXd dir = w.row(attr_index).transpose();
  const double norm = dir.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::ZeroDirection, "attribute direction is zero");
  return z + delta * dir / norm;
}

}  // namespace matchlab
