#pragma once

// Method of multipliers for
//
//   min_W  F(W)   s.t.  W >= 0, diag(W) = 0, h(W) = 0
//
// Each outer step minimizes the augmented Lagrangian
//   L_c(W, lambda) = F(W) + lambda h(W) + c/2 h(W)^2
// over the feasible orthant by projected gradient descent, then raises the
// multiplier by c h(W) and grows c by beta whenever h failed to shrink by a
// factor gamma.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nndag/acyclicity.hpp"
#include "nndag/errors.hpp"
#include "nndag/graph.hpp"
#include "nndag/score.hpp"

namespace nndag {

struct SolverConfig {
  double alpha = 1e-3;
  AcyclicityFn acyclicity = AcyclicityFn::ldet(1.0);
  /// Known noise covariance for the weighted score; nullopt = unweighted.
  std::optional<NoiseModel> noise_weighting;

  double lambda0 = 0.0;
  double c0 = 1.0;
  double beta = 5.0;
  double gamma = 0.25;
  int kappa_max = 20;
  double h_tol = 1e-8;

  int inner_max_iters = 50000;
  double inner_grad_tol = 1e-6;
  double step0 = 1e-2;
  double backtrack = 0.5;
  /// Try a Barzilai-Borwein step before backtracking (else reuse the last
  /// accepted step, doubled).
  bool bb_steps = true;
  /// Scale each coordinate's step by the inverse score curvature
  /// S_ii * c_j (a diagonal metric; projection onto W >= 0 is unchanged).
  bool diagonal_scaling = true;

  double tau_threshold = 0.3;

  ScoreFn score_fn() const { return ScoreFn{alpha, noise_weighting}; }

  void validate() const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    acyclicity.validate();
    if (noise_weighting) noise_weighting->validate();
    if (!(lambda0 >= 0.0)) throw ConfigError("lambda0 must be >= 0");
    if (!(c0 > 0.0)) throw ConfigError("c0 must be > 0");
    if (!(beta > 1.0)) throw ConfigError("beta must be > 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (kappa_max < 1) throw ConfigError("kappa_max must be >= 1");
    if (!(h_tol > 0.0)) throw ConfigError("h_tol must be > 0");
    if (inner_max_iters < 1) throw ConfigError("inner_max_iters must be >= 1");
    if (!(inner_grad_tol >= 0.0)) throw ConfigError("inner_grad_tol must be >= 0");
    if (!(step0 > 0.0)) throw ConfigError("step0 must be > 0");
    if (!(backtrack > 0.0 && backtrack < 1.0))
      throw ConfigError("backtrack must lie in (0, 1)");
    if (!(tau_threshold >= 0.0)) throw ConfigError("tau_threshold must be >= 0");
  }
};

struct OuterRecord {
  double lambda = 0.0;  ///< multiplier used by this step's inner solve
  double c = 0.0;       ///< penalty used by this step's inner solve
  double h = 0.0;       ///< h at the inner solution
  double aug_lagrangian = 0.0;
  int inner_iterations = 0;
  bool inner_converged = false;
  bool inner_precision_limited = false;
};

struct SolveDiagnostics {
  std::vector<OuterRecord> records;
  double final_h = std::numeric_limits<double>::quiet_NaN();
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  /// h <= h_tol at exit.
  bool converged = false;

  int total_inner_iterations() const {
    int total = 0;
    for (const auto& r : records) total += r.inner_iterations;
    return total;
  }
};

/// The line search found no in-domain descent step.
class SolverStalled : public std::runtime_error {
 public:
  SolverStalled(const std::string& what, SolveDiagnostics diag)
      : std::runtime_error(what), diagnostics_(std::move(diag)) {}
  const SolveDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  SolveDiagnostics diagnostics_;
};

inline Result<double> aug_lagrangian(const ScoreContext& ctx, const SolverConfig& cfg,
                                     const AdjMatrix& w, double lambda, double c) {
  auto h = h_eval(cfg.acyclicity, w);
  if (!h) return h.error();
  return score_eval(ctx, cfg.score_fn(), w) + lambda * *h + 0.5 * c * *h * *h;
}

inline double update_multiplier(double lambda, double c, double h_val) {
  return lambda + c * h_val;
}

inline double update_penalty(double c, double h_new, double h_old, double beta,
                             double gamma) {
  return h_new > gamma * h_old ? beta * c : c;
}

struct InnerResult {
  AdjMatrix w;
  int iterations = 0;
  bool converged = false;
  /// Stopped because further decrease was below rounding, not at inner_grad_tol.
  bool precision_limited = false;
  double h = 0.0;
  /// Augmented Lagrangian at the start and after every accepted step.
  std::vector<double> objective_trace;
};

namespace detail {

struct AugEval {
  double value = 0.0;
  double h = 0.0;
  Matrix grad;
};

inline std::optional<AugEval> aug_value_grad(const ScoreContext& ctx,
                                             const SolverConfig& cfg,
                                             const ScoreFn& score_fn,
                                             const AdjMatrix& w, double lambda,
                                             double c) {
  auto hv = h_value_grad(cfg.acyclicity, w);
  if (!hv) return std::nullopt;
  auto sv = score_value_grad(ctx, score_fn, w);
  AugEval e;
  e.h = hv->value;
  e.value = sv.value + lambda * e.h + 0.5 * c * e.h * e.h;
  e.grad = std::move(sv.grad);
  e.grad += (lambda + c * e.h) * hv->grad;
  if (!std::isfinite(e.value) || !e.grad.allFinite()) return std::nullopt;
  return e;
}

}  // namespace detail

/// Projected gradient descent on L_c(., lambda) from a feasible, in-domain
/// start, with Armijo backtracking that also rejects out-of-domain points.
/// Stops once ||W - P(W - grad L)||_F <= inner_grad_tol.
inline InnerResult inner_minimize(const ScoreContext& ctx, const SolverConfig& cfg,
                                  const AdjMatrix& w_init, double lambda, double c) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-16;
  constexpr double kMaxStep = 1e12;

  const ScoreFn score_fn = cfg.score_fn();
  if ((w_init.array() < 0.0).any() || (w_init.diagonal().array() != 0.0).any())
    throw PreconditionError("inner_minimize needs a feasible start");
  auto cur = detail::aug_value_grad(ctx, cfg, score_fn, w_init, lambda, c);
  if (!cur) throw PreconditionError("inner_minimize start is outside h's domain");

  // Diagonal metric: precond(i, j) = 1 / (S_ii c_j).
  const Index d = ctx.dim();
  Matrix precond = Matrix::Ones(d, d);
  if (cfg.diagonal_scaling) {
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) {
        const double curv = ctx.gram()(i, i) * ctx.residual_weight()(j);
        precond(i, j) = curv > 0.0 ? 1.0 / curv : 1.0;
      }
  }

  InnerResult out;
  out.w = w_init;
  out.objective_trace.push_back(cur->value);
  double step = cfg.step0;

  for (int it = 0; it < cfg.inner_max_iters; ++it) {
    Matrix direction = precond.cwiseProduct(cur->grad);
    const double pg_norm = (out.w - project_feasible(out.w - direction)).norm();
    if (pg_norm <= cfg.inner_grad_tol) {
      out.converged = true;
      break;
    }

    // Decreases smaller than this are invisible in L's rounding.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(cur->value));
    std::optional<detail::AugEval> next;
    AdjMatrix candidate;
    double t = step;
    bool unresolvable = false;
    while (t >= kMinStep) {
      candidate = project_feasible(out.w - t * direction);
      const double slope = cur->grad.cwiseProduct(candidate - out.w).sum();
      next = detail::aug_value_grad(ctx, cfg, score_fn, candidate, lambda, c);
      if (next && next->value <= cur->value + kArmijo * slope) break;
      next.reset();
      if (-slope < noise) {
        unresolvable = true;
        break;
      }
      t *= cfg.backtrack;
    }
    if (!next) {
      // The predicted decrease fell below rounding before Armijo held: the
      // iterate is as stationary as double precision can certify.
      if (unresolvable) {
        out.converged = true;
        out.precision_limited = true;
        break;
      }
      SolveDiagnostics diag;
      diag.final_h = cur->h;
      diag.final_objective = cur->value;
      throw SolverStalled("no in-domain descent step above " +
                              std::to_string(kMinStep) + " (projected gradient " +
                              std::to_string(pg_norm) + ")",
                          std::move(diag));
    }

    const Matrix s = candidate - out.w;
    const Matrix y = next->grad - cur->grad;
    if (cfg.bb_steps) {
      // BB1 step in the scaled metric.
      const double sy = s.cwiseProduct(y).sum();
      const double ss = s.cwiseProduct(s.cwiseQuotient(precond)).sum();
      step = sy > 0.0 ? ss / sy : 2.0 * t;
    } else {
      step = 2.0 * t;
    }
    step = std::clamp(step, kMinStep, kMaxStep);

    out.w = std::move(candidate);
    cur = std::move(next);
    out.objective_trace.push_back(cur->value);
    out.iterations = it + 1;
  }
  out.h = cur->h;
  return out;
}

/// Full method-of-multipliers solve from W = 0. Returns the raw final iterate;
/// thresholding is left to the caller. `seed` is accepted for interface
/// symmetry; the procedure is deterministic and draws no random numbers.
inline std::pair<AdjMatrix, SolveDiagnostics> solve(const DataMatrix& x,
                                                    const SolverConfig& cfg,
                                                    std::uint64_t seed = 0) {
  (void)seed;
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const ScoreContext ctx = build_context(x, cfg.score_fn());
  const Index d = ctx.dim();

  AdjMatrix w = AdjMatrix::Zero(d, d);
  double lambda = cfg.lambda0;
  double c = cfg.c0;
  auto h0 = h_eval(cfg.acyclicity, w);
  double h_old = h0 ? std::max(*h0, 0.0) : 0.0;

  SolveDiagnostics diag;
  for (int k = 0; k < cfg.kappa_max; ++k) {
    InnerResult inner;
    try {
      inner = inner_minimize(ctx, cfg, w, lambda, c);
    } catch (SolverStalled& e) {
      SolveDiagnostics partial = diag;
      partial.final_h = e.diagnostics().final_h;
      partial.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
      throw SolverStalled(std::string("outer iteration ") + std::to_string(k + 1) +
                              ": " + e.what(),
                          std::move(partial));
    }
    w = std::move(inner.w);
    // Rounding can leave h a hair below zero on exact DAGs.
    const double h_new = std::max(inner.h, 0.0);

    OuterRecord rec;
    rec.lambda = lambda;
    rec.c = c;
    rec.h = inner.h;
    rec.aug_lagrangian = inner.objective_trace.back();
    rec.inner_iterations = inner.iterations;
    rec.inner_converged = inner.converged;
    rec.inner_precision_limited = inner.precision_limited;
    diag.records.push_back(rec);

    lambda = update_multiplier(lambda, c, h_new);
    c = update_penalty(c, h_new, h_old, cfg.beta, cfg.gamma);
    h_old = h_new;
    if (h_new <= cfg.h_tol && inner.converged) break;
  }

  diag.final_h = diag.records.back().h;
  diag.final_objective = score_eval(ctx, cfg.score_fn(), w);
  diag.converged = diag.final_h <= cfg.h_tol;
  diag.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return {std::move(w), std::move(diag)};
}

}  // namespace nndag
