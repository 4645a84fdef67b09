#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace matchlab {

/// Expanded style matrix: L levels (rows) by D style dimensions (columns).
/// The restricted representation is the mean of the rows.
class LatentCode {
 public:
  static constexpr int kDefaultLevels = 18;
  static constexpr int kDefaultDims = 512;

  LatentCode() : LatentCode(Eigen::MatrixXd::Zero(1, 1)) {}
  /// Throws ShapeError for an empty matrix and NonFinite for NaN/Inf entries.
  explicit LatentCode(Eigen::MatrixXd expanded);

  /// Every level set to `restricted`.
  static LatentCode broadcast(const Eigen::VectorXd& restricted, int levels);

  const Eigen::MatrixXd& expanded() const noexcept { return expanded_; }
  int levels() const noexcept { return static_cast<int>(expanded_.rows()); }
  int dims() const noexcept { return static_cast<int>(expanded_.cols()); }

  bool operator==(const LatentCode& other) const {
    return expanded_.rows() == other.expanded_.rows() && expanded_.cols() == other.expanded_.cols() &&
           expanded_ == other.expanded_;
  }

 private:
  Eigen::MatrixXd expanded_;
};

/// Row mean of the expanded matrix (length D).
Eigen::VectorXd restricted_projection(const LatentCode& code);

/// Sum over rows of the squared distance from the row to the row mean.
double deviation_penalty(const LatentCode& code);
double deviation_penalty(const Eigen::MatrixXd& expanded);

/// Frobenius distance between two codes of equal shape; DimensionMismatch otherwise.
double gan_distance(const LatentCode& a, const LatentCode& b);

/// Black-box perceptual loss D(G(Z), x) for a fixed target, with gradient in Z.
class ForwardModel {
 public:
  struct Evaluation {
    double loss = 0.0;
    Eigen::MatrixXd gradient;
  };

  virtual ~ForwardModel() = default;
  virtual int levels() const = 0;
  virtual int dims() const = 0;
  virtual Evaluation evaluate(const Eigen::MatrixXd& expanded) const = 0;
};

/// G is a fixed linear map from vec(Z) (row-major, L*D) to R^P and the
/// distance is the squared Euclidean norm to a target in R^P.
class LinearToyModel final : public ForwardModel {
 public:
  LinearToyModel(Eigen::MatrixXd generator, Eigen::VectorXd target, int levels, int dims);

  /// Random Gaussian generator scaled by 1/sqrt(P); target = G vec(reachable).
  static LinearToyModel random(int levels, int dims, int outputs, const LatentCode& reachable,
                               std::uint64_t seed);
  /// Same generator construction with an explicit target in R^P.
  static Eigen::MatrixXd random_generator(int levels, int dims, int outputs, std::uint64_t seed);

  int levels() const override { return levels_; }
  int dims() const override { return dims_; }
  Evaluation evaluate(const Eigen::MatrixXd& expanded) const override;

  const Eigen::MatrixXd& generator() const noexcept { return generator_; }
  const Eigen::VectorXd& target() const noexcept { return target_; }

 private:
  Eigen::MatrixXd generator_;
  Eigen::VectorXd target_;
  int levels_;
  int dims_;
};

/// Row-major flattening used by LinearToyModel.
Eigen::VectorXd flatten(const Eigen::MatrixXd& expanded);
Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat, int levels, int dims);

struct ProjectionConfig {
  double lambda = 0.1;
  double step_size = 1.0;
  int max_iters = 1000;
  double grad_tolerance = 1e-8;
};

struct ProjectionResult {
  LatentCode code;
  std::vector<double> trace;  // total objective per accepted step
  int iterations = 0;
  bool converged = false;
};

/// Minimizes model.loss(Z) + lambda * deviation_penalty(Z) from `init`.
ProjectionResult project(const ForwardModel& model, const LatentCode& init, const ProjectionConfig& cfg);

/// Total projection objective (value and gradient) at Z.
ForwardModel::Evaluation projection_objective(const ForwardModel& model, const Eigen::MatrixXd& expanded,
                                              double lambda);

// Serialization: "MLAT" + u32 L + u32 D (little endian) + L*D float32 row-major,
// or headerless CSV with L rows of D values.
void write_latent(const std::filesystem::path& path, const LatentCode& code);
void write_latent_csv(const std::filesystem::path& path, const LatentCode& code);
/// Detects the binary magic; anything else is parsed as CSV.
LatentCode read_latent(const std::filesystem::path& path);

}  // namespace matchlab
