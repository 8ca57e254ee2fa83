#pragma once

// Estimation quality of W_hat against the ground truth W_star.

#include <Eigen/Dense>

#include <cmath>

#include "nndag/errors.hpp"
#include "nndag/graph.hpp"

namespace nndag {

/// How a reversed edge contributes to SHD.
enum class ReversalCost { one, two };

struct MetricReport {
  double nerr = 0.0;
  double shd_normalized = 0.0;
  int true_positives = 0;
  int false_positives = 0;  ///< extra edges, reversals excluded
  int false_negatives = 0;  ///< missing edges, reversals excluded
  int reversed = 0;

  int shd(ReversalCost cost = ReversalCost::one) const {
    return false_positives + false_negatives +
           (cost == ReversalCost::one ? reversed : 2 * reversed);
  }
};

namespace detail {

inline void require_same_shape(const AdjMatrix& a, const AdjMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw PreconditionError("metrics need two square matrices of equal size");
}

}  // namespace detail

/// ||W* - W_hat||_F^2 / ||W*||_F^2 on raw weights.
inline double nerr(const AdjMatrix& w_hat, const AdjMatrix& w_star) {
  detail::require_same_shape(w_hat, w_star);
  const double denom = w_star.squaredNorm();
  if (!(denom > 0.0)) throw MetricError("nerr is undefined for a zero ground truth");
  return (w_star - w_hat).squaredNorm() / denom;
}

/// Edge counts between the supports {|w_hat| > tau} and {|w_star| > 0}.
/// A pair i,j where one graph has only i->j and the other only j->i is one
/// reversal and is not also counted as an extra or missing edge.
inline MetricReport compare_supports(const AdjMatrix& w_hat, const AdjMatrix& w_star,
                                     double tau) {
  detail::require_same_shape(w_hat, w_star);
  if (tau < 0.0) throw PreconditionError("threshold must be >= 0");
  const Index d = w_star.rows();
  auto est = [&](Index i, Index j) { return std::abs(w_hat(i, j)) > tau; };
  auto tru = [&](Index i, Index j) { return std::abs(w_star(i, j)) > 0.0; };

  MetricReport r;
  for (Index i = 0; i < d; ++i) {
    if (est(i, i) && !tru(i, i)) ++r.false_positives;
    if (!est(i, i) && tru(i, i)) ++r.false_negatives;
    if (est(i, i) && tru(i, i)) ++r.true_positives;
    for (Index j = i + 1; j < d; ++j) {
      const bool e_ij = est(i, j), e_ji = est(j, i);
      const bool t_ij = tru(i, j), t_ji = tru(j, i);
      if ((e_ij && !e_ji && !t_ij && t_ji) || (e_ji && !e_ij && !t_ji && t_ij)) {
        ++r.reversed;
        continue;
      }
      r.true_positives += (e_ij && t_ij) + (e_ji && t_ji);
      r.false_positives += (e_ij && !t_ij) + (e_ji && !t_ji);
      r.false_negatives += (!e_ij && t_ij) + (!e_ji && t_ji);
    }
  }
  return r;
}

/// SHD between thresholded supports, divided by the node count.
inline double normalized_shd(const AdjMatrix& w_hat, const AdjMatrix& w_star,
                             double tau, ReversalCost cost = ReversalCost::one) {
  const MetricReport r = compare_supports(w_hat, w_star, tau);
  return static_cast<double>(r.shd(cost)) / static_cast<double>(w_star.rows());
}

/// Both metrics plus the edge counts behind SHD.
inline MetricReport evaluate(const AdjMatrix& w_hat, const AdjMatrix& w_star,
                             double tau, ReversalCost cost = ReversalCost::one) {
  MetricReport r = compare_supports(w_hat, w_star, tau);
  r.nerr = nerr(w_hat, w_star);
  r.shd_normalized = static_cast<double>(r.shd(cost)) / static_cast<double>(w_star.rows());
  return r;
}

}  // namespace nndag
