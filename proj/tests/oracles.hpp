#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the solver; score and gradient checks go back to the defining
// formulas.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "nndag/graph.hpp"
#include "nndag/rng.hpp"

namespace nndag::oracle {

/// Central differences of a scalar function of a matrix, one entry at a time.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f,
                                const Matrix& w, double step = 1e-5) {
  Matrix g(w.rows(), w.cols());
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) {
      Matrix plus = w, minus = w;
      plus(i, j) += step;
      minus(i, j) -= step;
      g(i, j) = (f(plus) - f(minus)) / (2.0 * step);
    }
  return g;
}

/// Largest relative entrywise discrepancy, scaled by the larger gradient norm.
inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

/// 1/(2n) sum_j c_j ||x_j - (W^T X)_j||^2 + alpha sum W, straight from X.
inline double direct_score(const DataMatrix& x, const AdjMatrix& w, double alpha,
                           const Vector& residual_weight) {
  const Matrix r = x - w.transpose() * x;
  double quad = 0.0;
  for (Index j = 0; j < r.rows(); ++j) quad += residual_weight(j) * r.row(j).squaredNorm();
  return quad / (2.0 * static_cast<double>(x.cols())) + alpha * w.sum();
}

inline double spectral_radius(const Matrix& w) {
  Eigen::EigenSolver<Matrix> es(w, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Random non-negative, zero-diagonal matrix with edge probability p, rescaled
/// so that its spectral radius equals `target`. DAG draws are left unscaled:
/// their computed radius is rounding noise, not zero.
inline Matrix random_nonneg(Rng& rng, Index d, double p, double target) {
  Matrix w = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      if (i != j && rng.uniform() < p) w(i, j) = rng.uniform(0.1, 1.0);
  if (!is_dag(w)) w *= target / spectral_radius(w);
  return w;
}

/// Random strictly upper triangular matrix permuted by a random relabeling.
inline Matrix random_dag(Rng& rng, Index d, double p, double lo = 0.5, double hi = 2.0) {
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = d - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
  Matrix w = Matrix::Zero(d, d);
  for (Index a = 0; a < d; ++a)
    for (Index b = a + 1; b < d; ++b)
      if (rng.uniform() < p) w(perm[a], perm[b]) = rng.uniform(lo, hi);
  return w;
}

/// Exact minimizer of 1/2 c (e_j - w)^T S (e_j - w) + alpha sum w over
/// w >= 0 supported on `allowed`, by enumerating every active set.
inline std::pair<Vector, double> best_column(const Matrix& s, Index j, double c,
                                             double alpha,
                                             const std::vector<Index>& allowed) {
  const Index d = s.rows();
  const auto k = allowed.size();
  auto column_objective = [&](const Vector& w) {
    Vector r = -w;
    r(j) += 1.0;
    return 0.5 * c * r.dot(s * r) + alpha * w.sum();
  };
  Vector best = Vector::Zero(d);
  double best_value = column_objective(best);
  for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
    std::vector<Index> support;
    for (std::size_t b = 0; b < k; ++b)
      if (mask & (std::size_t{1} << b)) support.push_back(allowed[b]);
    const auto m = static_cast<Index>(support.size());
    Matrix spp(m, m);
    Vector rhs(m);
    for (Index a = 0; a < m; ++a) {
      rhs(a) = s(support[a], j) - alpha / c;
      for (Index b = 0; b < m; ++b) spp(a, b) = s(support[a], support[b]);
    }
    const Vector wp = spp.ldlt().solve(rhs);
    if ((wp.array() < 0.0).any() || !wp.allFinite()) continue;
    Vector w = Vector::Zero(d);
    for (Index a = 0; a < m; ++a) w(support[a]) = wp(a);
    const double value = column_objective(w);
    if (value < best_value) {
      best_value = value;
      best = w;
    }
  }
  return {best, best_value};
}

struct OrderingOptimum {
  Matrix w;
  double objective = std::numeric_limits<double>::infinity();
};

/// Global minimum of the score over non-negative DAGs: enumerate all node
/// orderings, and for each solve every column exactly over the permitted
/// parents (the nodes earlier in the ordering).
inline OrderingOptimum best_over_orderings(const Matrix& s, const Vector& residual_weight,
                                           double alpha) {
  const Index d = s.rows();
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  OrderingOptimum best;
  do {
    Matrix w = Matrix::Zero(d, d);
    double total = 0.0;
    for (Index pos = 0; pos < d; ++pos) {
      const Index j = order[pos];
      std::vector<Index> allowed(order.begin(), order.begin() + pos);
      auto [col, value] = best_column(s, j, residual_weight(j), alpha, allowed);
      w.col(j) = col;
      total += value;
    }
    if (total < best.objective) {
      best.objective = total;
      best.w = w;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

/// Zero every entry at or below the smallest threshold that leaves a DAG.
inline Matrix nearest_dag_by_threshold(const Matrix& w) {
  std::vector<double> levels{0.0};
  for (Index i = 0; i < w.size(); ++i)
    if (w.data()[i] > 0.0) levels.push_back(w.data()[i]);
  std::sort(levels.begin(), levels.end());
  for (double t : levels) {
    if (is_dag(w, t)) {
      Matrix out = w;
      for (Index i = 0; i < out.size(); ++i)
        if (std::abs(out.data()[i]) <= t) out.data()[i] = 0.0;
      return out;
    }
  }
  return Matrix::Zero(w.rows(), w.cols());
}

}  // namespace nndag::oracle
