#include "matchlab/latent.hpp"

#include <cmath>
#include <random>
#include <string>

#include "matchlab/error.hpp"
#include "matchlab/io.hpp"
#include "matchlab/optim.hpp"

namespace matchlab {

LatentCode::LatentCode(Eigen::MatrixXd expanded) : expanded_(std::move(expanded)) {
  if (expanded_.rows() < 1 || expanded_.cols() < 1) {
    throw Error(ErrorCode::ShapeError, "latent code needs at least one level and one dimension");
  }
  if (!expanded_.allFinite()) throw Error(ErrorCode::NonFinite, "latent code has non-finite entries");
}

LatentCode LatentCode::broadcast(const Eigen::VectorXd& restricted, int levels) {
  if (levels < 1) throw Error(ErrorCode::ShapeError, "levels must be >= 1");
  return LatentCode(restricted.transpose().replicate(levels, 1));
}

Eigen::VectorXd restricted_projection(const LatentCode& code) {
  return code.expanded().colwise().mean().transpose();
}

// Pairwise form of sum_j ||z_j - mean||^2, exactly zero when all rows are equal.
double deviation_penalty(const Eigen::MatrixXd& expanded) {
  double total = 0.0;
  for (Eigen::Index j = 1; j < expanded.rows(); ++j)
    for (Eigen::Index k = 0; k < j; ++k) total += (expanded.row(j) - expanded.row(k)).squaredNorm();
  return total / static_cast<double>(expanded.rows());
}

double deviation_penalty(const LatentCode& code) { return deviation_penalty(code.expanded()); }

double gan_distance(const LatentCode& a, const LatentCode& b) {
  if (a.levels() != b.levels() || a.dims() != b.dims()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.levels()) + "x" + std::to_string(a.dims()) + " vs " +
                    std::to_string(b.levels()) + "x" + std::to_string(b.dims()));
  }
  return (a.expanded() - b.expanded()).norm();
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& expanded) {
  Eigen::VectorXd flat(expanded.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < expanded.rows(); ++r)
    for (Eigen::Index c = 0; c < expanded.cols(); ++c) flat[k++] = expanded(r, c);
  return flat;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat, int levels, int dims) {
  if (flat.size() != static_cast<Eigen::Index>(levels) * dims) {
    throw Error(ErrorCode::DimensionMismatch, "flat vector length does not match L*D");
  }
  Eigen::MatrixXd m(levels, dims);
  Eigen::Index k = 0;
  for (int r = 0; r < levels; ++r)
    for (int c = 0; c < dims; ++c) m(r, c) = flat[k++];
  return m;
}

LinearToyModel::LinearToyModel(Eigen::MatrixXd generator, Eigen::VectorXd target, int levels, int dims)
    : generator_(std::move(generator)), target_(std::move(target)), levels_(levels), dims_(dims) {
  if (levels < 1 || dims < 1) throw Error(ErrorCode::ShapeError, "toy model needs L, D >= 1");
  if (generator_.cols() != static_cast<Eigen::Index>(levels) * dims || generator_.rows() != target_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "generator must be P x (L*D) with a length-P target");
  }
}

Eigen::MatrixXd LinearToyModel::random_generator(int levels, int dims, int outputs, std::uint64_t seed) {
  if (outputs < 1) throw Error(ErrorCode::InvalidArgument, "toy model needs at least one output");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(outputs));
  Eigen::MatrixXd g(outputs, static_cast<Eigen::Index>(levels) * dims);
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = normal(rng) * scale;
  return g;
}

LinearToyModel LinearToyModel::random(int levels, int dims, int outputs, const LatentCode& reachable,
                                      std::uint64_t seed) {
  if (reachable.levels() != levels || reachable.dims() != dims) {
    throw Error(ErrorCode::DimensionMismatch, "reachable code shape differs from the model shape");
  }
  Eigen::MatrixXd g = random_generator(levels, dims, outputs, seed);
  Eigen::VectorXd y = g * flatten(reachable.expanded());
  return LinearToyModel(std::move(g), std::move(y), levels, dims);
}

ForwardModel::Evaluation LinearToyModel::evaluate(const Eigen::MatrixXd& expanded) const {
  if (expanded.rows() != levels_ || expanded.cols() != dims_) {
    throw Error(ErrorCode::DimensionMismatch, "input shape differs from the toy model shape");
  }
  const Eigen::VectorXd residual = generator_ * flatten(expanded) - target_;
  Evaluation ev;
  ev.loss = residual.squaredNorm();
  ev.gradient = unflatten(2.0 * (generator_.transpose() * residual), levels_, dims_);
  return ev;
}

ForwardModel::Evaluation projection_objective(const ForwardModel& model, const Eigen::MatrixXd& expanded,
                                              double lambda) {
  ForwardModel::Evaluation ev = model.evaluate(expanded);
  if (ev.gradient.rows() != expanded.rows() || ev.gradient.cols() != expanded.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "forward model returned a gradient of the wrong shape");
  }
  if (lambda != 0.0) {
    // d/dZ_j sum_k ||Z_k - mean||^2 = 2 (Z_j - mean); the mean's own
    // dependence cancels because the deviations sum to zero.
    const Eigen::RowVectorXd mean = expanded.colwise().mean();
    const Eigen::MatrixXd centered = expanded.rowwise() - mean;
    ev.loss += lambda * centered.squaredNorm();
    ev.gradient += 2.0 * lambda * centered;
  }
  return ev;
}

ProjectionResult project(const ForwardModel& model, const LatentCode& init, const ProjectionConfig& cfg) {
  if (cfg.lambda < 0.0 || !std::isfinite(cfg.lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be a finite nonnegative number");
  }
  if (init.levels() != model.levels() || init.dims() != model.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "initial code shape differs from the model shape");
  }
  const int levels = init.levels();
  const int dims = init.dims();
  optim::Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const Eigen::MatrixXd z = unflatten(x, levels, dims);
    auto ev = projection_objective(model, z, cfg.lambda);
    if (grad) *grad = flatten(ev.gradient);
    return ev.loss;
  };
  optim::DescentConfig dc;
  dc.step_size = cfg.step_size;
  dc.max_iters = cfg.max_iters;
  dc.grad_tolerance = cfg.grad_tolerance;
  dc.nonfinite_code = ErrorCode::NonFiniteObjective;
  auto res = optim::gradient_descent(objective, flatten(init.expanded()), dc);
  ProjectionResult out{LatentCode(unflatten(res.x, levels, dims)), std::move(res.trace), res.iterations,
                       res.converged};
  return out;
}

void write_latent(const std::filesystem::path& path, const LatentCode& code) {
  io::write_f32_blob(path, "MLAT",
                     {static_cast<std::uint32_t>(code.levels()), static_cast<std::uint32_t>(code.dims())},
                     code.expanded());
}

void write_latent_csv(const std::filesystem::path& path, const LatentCode& code) {
  io::write_text(path, io::format_matrix_csv(code.expanded()));
}

LatentCode read_latent(const std::filesystem::path& path) {
  if (io::has_magic(path, "MLAT")) {
    const auto blob = io::read_f32_blob(path, "MLAT", 2);
    if (blob.dims[0] < 1 || blob.dims[1] < 1) {
      throw Error(ErrorCode::ShapeError, path.string() + ": empty latent code");
    }
    Eigen::MatrixXd m(blob.dims[0], blob.dims[1]);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = blob.values[k++];
    return LatentCode(std::move(m));
  }
  return LatentCode(io::parse_matrix(io::read_csv(path), path.string()));
}

}  // namespace matchlab
