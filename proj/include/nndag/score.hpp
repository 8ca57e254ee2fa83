#pragma once

// Least-squares score with a linear l1 surrogate, valid on W >= 0:
//
//   F(W) = 1/2 sum_j c_j [(I - W)^T S (I - W)]_jj + alpha sum_ij W_ij
//
// where S = X X^T / n. Unweighted: c_j = 1. Noise-weighted with Sigma_z =
// diag(v): c_j = 1 / v_j, i.e. each node's residual is scaled by its noise
// standard deviation. The isotropic case folds 1/sigma^2 into S instead.

#include <Eigen/Dense>

#include <optional>

#include "nndag/errors.hpp"
#include "nndag/graph.hpp"

namespace nndag {

struct ScoreFn {
  double alpha = 0.0;
  /// Known (relative) exogenous noise covariance; nullopt = unweighted.
  std::optional<NoiseModel> weighting;

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (weighting) weighting->validate();
  }
};

/// Second-moment matrix of one dataset, immutable once built.
class ScoreContext {
 public:
  ScoreContext(Matrix gram, Vector residual_weight)
      : gram_(std::move(gram)), residual_weight_(std::move(residual_weight)) {}

  Index dim() const { return gram_.rows(); }
  const Matrix& gram() const { return gram_; }
  const Vector& residual_weight() const { return residual_weight_; }

 private:
  Matrix gram_;
  Vector residual_weight_;
};

inline ScoreContext build_context(const DataMatrix& x, const ScoreFn& fn) {
  fn.validate();
  if (x.rows() < 1 || x.cols() < 1) throw InputError("empty data matrix");
  if (!x.allFinite()) throw InputError("data matrix has non-finite entries");
  const Index d = x.rows();
  Matrix s = x * x.transpose();
  s /= static_cast<double>(x.cols());
  // Bitwise symmetric.
  s.triangularView<Eigen::StrictlyLower>() = s.transpose();

  Vector weight = Vector::Ones(d);
  if (fn.weighting) {
    const NoiseModel& noise = *fn.weighting;
    noise.check_dimension(d);
    if (noise.kind == NoiseModel::Kind::isotropic)
      s /= noise.sigma2;
    else
      weight = noise.variances.cwiseInverse();
  }
  return ScoreContext(std::move(s), std::move(weight));
}

namespace detail {

inline void require_nonnegative(const AdjMatrix& w) {
  if ((w.array() < 0.0).any())
    throw PreconditionError("score requires a non-negative W");
}

}  // namespace detail

struct ScoreValueGrad {
  double value = 0.0;
  Matrix grad;
};

inline ScoreValueGrad score_value_grad(const ScoreContext& ctx, const ScoreFn& fn,
                                       const AdjMatrix& w) {
  detail::require_nonnegative(w);
  const Index d = ctx.dim();
  Matrix m = -w;
  m.diagonal().array() += 1.0;
  const Matrix q = ctx.gram() * m;
  const Vector& c = ctx.residual_weight();
  double quad = 0.0;
  for (Index j = 0; j < d; ++j) quad += c(j) * m.col(j).dot(q.col(j));

  ScoreValueGrad out;
  out.value = 0.5 * quad + fn.alpha * w.sum();
  out.grad = -(q * c.asDiagonal());
  out.grad.array() += fn.alpha;
  return out;
}

inline double score_eval(const ScoreContext& ctx, const ScoreFn& fn,
                         const AdjMatrix& w) {
  detail::require_nonnegative(w);
  Matrix m = -w;
  m.diagonal().array() += 1.0;
  const Matrix q = ctx.gram() * m;
  const Vector& c = ctx.residual_weight();
  double quad = 0.0;
  for (Index j = 0; j < ctx.dim(); ++j) quad += c(j) * m.col(j).dot(q.col(j));
  return 0.5 * quad + fn.alpha * w.sum();
}

/// S (W - I) diag(c) + alpha 11^T.
inline Matrix score_grad(const ScoreContext& ctx, const ScoreFn& fn,
                         const AdjMatrix& w) {
  return score_value_grad(ctx, fn, w).grad;
}

}  // namespace nndag
