#pragma once

// Weighted adjacency matrices, DAG checks, projections, and synthetic
// linear-SEM data.
//
// Convention: w(i, j) is the weight of edge i -> j. Observations are stored
// d x n, one column per sample, and satisfy X = W^T X + Z.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "nndag/errors.hpp"
#include "nndag/rng.hpp"

namespace nndag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense d x d edge-weight matrix.
using AdjMatrix = Matrix;
/// Dense d x n observation matrix.
using DataMatrix = Matrix;

/// Covariance of the exogenous noise: sigma^2 I or diag(variances).
struct NoiseModel {
  enum class Kind { isotropic, diagonal };

  Kind kind = Kind::isotropic;
  double sigma2 = 1.0;
  Vector variances;

  static NoiseModel isotropic(double sigma2) {
    NoiseModel m;
    m.kind = Kind::isotropic;
    m.sigma2 = sigma2;
    m.validate();
    return m;
  }

  static NoiseModel diagonal(Vector variances) {
    NoiseModel m;
    m.kind = Kind::diagonal;
    m.variances = std::move(variances);
    m.validate();
    return m;
  }

  double variance(Index i) const {
    return kind == Kind::isotropic ? sigma2 : variances(i);
  }

  void validate() const {
    if (kind == Kind::isotropic) {
      if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw ConfigError("noise variance must be positive and finite");
    } else {
      if (variances.size() == 0)
        throw ConfigError("diagonal noise model needs at least one variance");
      for (Index i = 0; i < variances.size(); ++i)
        if (!(variances(i) > 0.0) || !std::isfinite(variances(i)))
          throw ConfigError("noise variances must be positive and finite");
    }
  }

  /// Throws unless this model can describe d nodes.
  void check_dimension(Index d) const {
    if (kind == Kind::diagonal && variances.size() != d)
      throw ConfigError("diagonal noise model has " +
                        std::to_string(variances.size()) +
                        " variances for " + std::to_string(d) + " nodes");
  }
};

enum class GraphFamily { er, sf };

inline std::string_view to_string(GraphFamily f) {
  return f == GraphFamily::er ? "ER" : "SF";
}

inline GraphFamily parse_graph_family(std::string_view s) {
  if (s == "er" || s == "ER") return GraphFamily::er;
  if (s == "sf" || s == "SF") return GraphFamily::sf;
  throw ConfigError("unknown graph family '" + std::string(s) + "'");
}

/// Parameters of a random DAG. Weights are Uniform[weight_low, weight_high].
struct GraphSpec {
  GraphFamily family = GraphFamily::er;
  Index d = 100;
  double avg_degree = 4.0;
  double weight_low = 0.5;
  double weight_high = 2.0;

  void validate() const {
    if (d < 1) throw ConfigError("graph needs at least one node");
    if (!(avg_degree > 0.0) || !std::isfinite(avg_degree))
      throw ConfigError("average degree must be positive");
    if (!(weight_low > 0.0) || !(weight_low <= weight_high) ||
        !std::isfinite(weight_high))
      throw ConfigError("edge weights need 0 < weight_low <= weight_high");
    // d * deg / 2 <= d (d - 1) / 2
    if (avg_degree > static_cast<double>(d - 1))
      throw ConfigError("average degree " + std::to_string(avg_degree) +
                        " exceeds d - 1 = " + std::to_string(d - 1));
    if (family == GraphFamily::sf) {
      const auto m = static_cast<Index>(std::lround(avg_degree / 2.0));
      if (m < 1 || m >= d)
        throw ConfigError("scale-free attachment parameter round(deg/2) must "
                          "lie in [1, d - 1]");
    }
  }
};

/// Topological order of the support {|w(i,j)| > edge_tol}, or nullopt if the
/// support has a cycle (Kahn's algorithm; ties broken by smallest index).
inline std::optional<std::vector<Index>> topological_order(const AdjMatrix& w,
                                                           double edge_tol) {
  const Index d = w.rows();
  std::vector<Index> indegree(static_cast<std::size_t>(d), 0);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i)
      if (std::abs(w(i, j)) > edge_tol) ++indegree[j];

  std::priority_queue<Index, std::vector<Index>, std::greater<>> ready;
  for (Index i = 0; i < d; ++i)
    if (indegree[i] == 0) ready.push(i);

  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(d));
  while (!ready.empty()) {
    const Index i = ready.top();
    ready.pop();
    order.push_back(i);
    for (Index j = 0; j < d; ++j)
      if (std::abs(w(i, j)) > edge_tol && --indegree[j] == 0) ready.push(j);
  }
  if (static_cast<Index>(order.size()) != d) return std::nullopt;
  return order;
}

inline bool is_dag(const AdjMatrix& w, double edge_tol = 0.0) {
  if (edge_tol < 0.0) throw PreconditionError("edge_tol must be >= 0");
  return topological_order(w, edge_tol).has_value();
}

/// Power-iteration estimate of the spectral radius of a non-negative matrix.
/// Diagnostic only: it is not a certified bound and does not gate feasibility.
inline double spectral_radius_upper(const AdjMatrix& w, int iters) {
  const Index d = w.rows();
  Vector v = Vector::Ones(d);
  double ratio = 0.0;
  for (int k = 0; k < iters; ++k) {
    const double prev = v.lpNorm<1>();
    if (prev == 0.0) return 0.0;
    Vector next = w * v;
    ratio = next.lpNorm<1>() / prev;
    v = next / prev;
  }
  return ratio;
}

/// Entrywise max(w, 0) with the diagonal zeroed.
inline AdjMatrix project_feasible(const AdjMatrix& w) {
  AdjMatrix p = w.cwiseMax(0.0);
  p.diagonal().setZero();
  return p;
}

/// 0/1 matrix marking entries strictly above tau.
inline AdjMatrix threshold_support(const AdjMatrix& w, double tau) {
  if (tau < 0.0) throw PreconditionError("threshold must be >= 0");
  return (w.array() > tau).cast<double>().matrix();
}

namespace detail {

inline std::vector<Index> random_permutation(Index d, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) perm[i] = i;
  for (Index i = d - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

/// Undirected Barabasi-Albert edge list: node m onward attaches to m distinct
/// existing nodes chosen proportionally to degree.
inline std::vector<std::pair<Index, Index>> barabasi_albert(Index d, Index m,
                                                            Rng& rng) {
  std::vector<std::pair<Index, Index>> edges;
  std::vector<Index> targets(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) targets[i] = i;
  std::vector<Index> repeated;
  for (Index source = m; source < d; ++source) {
    for (Index t : targets) edges.emplace_back(source, t);
    repeated.insert(repeated.end(), targets.begin(), targets.end());
    repeated.insert(repeated.end(), static_cast<std::size_t>(m), source);
    targets.clear();
    while (static_cast<Index>(targets.size()) < m) {
      const Index pick = repeated[rng.below(repeated.size())];
      if (std::find(targets.begin(), targets.end(), pick) == targets.end())
        targets.push_back(pick);
    }
  }
  return edges;
}

}  // namespace detail

/// Random weighted DAG. Edges always run from earlier to later nodes of a
/// random permutation, so the result is acyclic by construction.
inline AdjMatrix gen_dag(const GraphSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const Index d = spec.d;
  const std::vector<Index> perm = detail::random_permutation(d, rng);
  std::vector<Index> rank(static_cast<std::size_t>(d));
  for (Index r = 0; r < d; ++r) rank[perm[r]] = r;

  AdjMatrix w = AdjMatrix::Zero(d, d);
  if (spec.family == GraphFamily::er) {
    const double p = spec.avg_degree / static_cast<double>(d - 1);
    for (Index a = 0; a < d; ++a)
      for (Index b = a + 1; b < d; ++b)
        if (rng.uniform() < p) w(perm[a], perm[b]) = 1.0;
  } else {
    const auto m = static_cast<Index>(std::lround(spec.avg_degree / 2.0));
    for (auto [u, v] : detail::barabasi_albert(d, m, rng)) {
      if (rank[u] < rank[v])
        w(u, v) = 1.0;
      else
        w(v, u) = 1.0;
    }
  }

  // Weights drawn in a fixed row-major sweep so they depend only on the seed.
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      if (w(i, j) != 0.0) w(i, j) = rng.uniform(spec.weight_low, spec.weight_high);
  return w;
}

/// Zero-mean Gaussian noise, d x n. Drawn column by column.
inline DataMatrix sample_noise(Index d, Index n, const NoiseModel& noise,
                               std::uint64_t seed) {
  noise.validate();
  noise.check_dimension(d);
  if (n < 1) throw PreconditionError("need at least one sample");
  Rng rng(seed);
  Vector sd(d);
  for (Index i = 0; i < d; ++i) sd(i) = std::sqrt(noise.variance(i));
  DataMatrix z(d, n);
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < d; ++i) z(i, k) = sd(i) * rng.normal();
  return z;
}

/// Draws X = W^T X + Z by forward substitution along a topological order.
inline DataMatrix sample_sem(const AdjMatrix& w_star, Index n,
                             const NoiseModel& noise, std::uint64_t seed) {
  if (w_star.rows() != w_star.cols())
    throw PreconditionError("adjacency matrix must be square");
  const auto order = topological_order(w_star, 0.0);
  if (!order) throw PreconditionError("sample_sem requires an acyclic W");
  DataMatrix x = sample_noise(w_star.rows(), n, noise, seed);
  for (Index j : *order) {
    for (Index i = 0; i < w_star.rows(); ++i) {
      const double weight = w_star(i, j);
      if (weight != 0.0) x.row(j) += weight * x.row(i);
    }
  }
  return x;
}

}  // namespace nndag
