#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace matchlab {

/// N x N_A attribute values with one label per column.
struct AttributeMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;

  /// InvalidArgument / NonFinite / ShapeError on a malformed matrix.
  void validate() const;
};

/// Target correlation between predicted columns i > j. An empty mask means
/// all rows; otherwise only rows with mask[r] != 0 enter the correlation.
struct CorrelationTarget {
  int i = 1;
  int j = 0;
  double rho = 0.0;
  std::vector<char> mask;
};

/// Pairs without a target are pulled toward zero correlation.
struct CorrelationPrior {
  std::vector<CorrelationTarget> targets;

  const CorrelationTarget* find(int i, int j) const;
  void validate(int n_attrs, std::size_t n_rows) const;
  /// Restricts every mask to the given rows (used for train/test splits).
  CorrelationPrior subset(const std::vector<std::size_t>& rows) const;
};

/// Pearson product-moment correlation. ZeroVariance for a constant input.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);
/// Pearson correlation of average ranks.
double spearman(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);
/// 1-based ranks, ties receive the average of their positions.
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x);

struct LossTerms {
  double total = 0.0;
  double mse_term = 0.0;   // ||A - A_hat||_F (squared when requested)
  double corr_term = 0.0;  // sum over i > j of |rho_ij - rho*_ij|
};

/// Correlation-penalized fit loss. With lambda == 0 the correlation term is
/// skipped entirely. When grad is non-null it receives dL/dA_hat, using the
/// zero subgradient where rho_ij == rho*_ij or the residual vanishes.
LossTerms disentangle_loss(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& predicted, double lambda,
                           const CorrelationPrior* prior = nullptr, bool squared_mse = false,
                           Eigen::MatrixXd* grad = nullptr);

/// Correlation term alone; requires nonzero-variance columns.
double correlation_term(const Eigen::MatrixXd& predicted, const CorrelationPrior* prior = nullptr);

enum class MapperKind { Linear, Mlp };

/// T: R^{N_Z} -> R^{N_A}. Linear is a single affine layer; Mlp is three
/// fully connected layers (N_Z -> H -> H -> N_A) with ReLU in between.
class AttributeMapper {
 public:
  static constexpr int kDefaultHidden = 100;

  static AttributeMapper linear(int n_inputs, int n_outputs, std::uint64_t seed);
  static AttributeMapper mlp(int n_inputs, int n_outputs, int hidden, std::uint64_t seed);
  static AttributeMapper from_linear(Eigen::MatrixXd weights, Eigen::VectorXd bias);

  MapperKind kind() const noexcept { return kind_; }
  int input_dim() const noexcept;
  int output_dim() const noexcept;

  /// N x N_Z -> N x N_A.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& z) const;
  Eigen::VectorXd predict_one(const Eigen::VectorXd& z) const;

  std::size_t parameter_count() const noexcept;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& params);
  /// Gradient of a loss w.r.t. the parameters, given dLoss/dPrediction.
  Eigen::VectorXd backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d_prediction) const;

  /// N_A x N_Z weight matrix and bias of a linear mapper; InvalidArgument for MLPs.
  const Eigen::MatrixXd& linear_weights() const;
  const Eigen::VectorXd& linear_bias() const;

 private:
  struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;
  };
  AttributeMapper(MapperKind kind, std::vector<Layer> layers) : kind_(kind), layers_(std::move(layers)) {}

  MapperKind kind_ = MapperKind::Linear;
  std::vector<Layer> layers_;
};

struct TrainConfig {
  MapperKind kind = MapperKind::Linear;
  double lambda = 0.1;
  int hidden = AttributeMapper::kDefaultHidden;
  double train_fraction = 0.7;  // 3500 / 5000
  std::optional<std::size_t> train_n;
  std::optional<std::size_t> test_n;
  bool squared_mse = false;
  int max_iters = 2000;
  double step_size = 1.0;
  double grad_tolerance = 1e-8;
  std::uint64_t seed = 0;
  CorrelationPrior prior;  // masks indexed over all N rows
};

struct SplitMetrics {
  double mse = 0.0;            // mean squared error per entry
  double mean_abs_corr = 0.0;  // mean |rho| over predicted column pairs (NaN if undefined)
  std::vector<double> pearson;   // per attribute, prediction vs truth
  std::vector<double> spearman;
};

struct TrainResult {
  AttributeMapper mapper = AttributeMapper::linear(1, 1, 0);
  SplitMetrics train;
  SplitMetrics test;
  LossTerms final_loss;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // line search found no decrease (typically at float precision)
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Seeded split, then gradient descent with backtracking on the training loss.
TrainResult train_mapper(const Eigen::MatrixXd& z, const AttributeMatrix& a, const TrainConfig& cfg);

/// Metrics for a mapper on the given rows; correlations that are undefined
/// (constant columns) are reported as NaN.
SplitMetrics evaluate_mapper(const AttributeMapper& mapper, const Eigen::MatrixXd& z, const AttributeMatrix& a,
                             const std::vector<std::size_t>& rows);

/// One train_mapper run per lambda, all other settings shared.
std::vector<TrainResult> lambda_sweep(const Eigen::MatrixXd& z, const AttributeMatrix& a, TrainConfig cfg,
                                      const std::vector<double>& lambdas);

/// Modified Gram-Schmidt on the rows (with one reorthogonalization pass).
/// RankDeficient when a residual norm drops below 1e-10.
Eigen::MatrixXd gram_schmidt(const Eigen::MatrixXd& rows);

/// Linear mapper whose weight rows are orthonormalized; bias is kept.
AttributeMapper orthogonalize(const AttributeMapper& linear);

/// z + delta * w_j / ||w_j|| for row j of a linear mapper. ZeroDirection for a zero row.
Eigen::VectorXd edit_direction(const Eigen::VectorXd& z, const AttributeMapper& mapper, int attr_index,
                               double delta);

}  // namespace matchlab
