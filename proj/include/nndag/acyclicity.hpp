#pragma once

// Acyclicity functions h(W) whose zero set on non-negative matrices is the set
// of DAG adjacency matrices, plus the dense kernels behind them.
//
//   ldet(s)   d log s - log det(sI - W)         grad (sI - W)^{-T}
//   mexp      tr exp(W) - d                     grad exp(W)^T
//   notears   tr exp(W o W) - d                 grad 2 exp(W o W)^T o W
//   dagma(s)  d log s - log det(sI - W o W)     grad 2 (sI - W o W)^{-T} o W
//
// ldet and dagma are only defined where log det is; evaluation outside that
// region yields DomainViolation rather than an exception, because the solver's
// line search probes such points routinely.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>
#include <string_view>

#include "nndag/errors.hpp"
#include "nndag/graph.hpp"
#include "nndag/result.hpp"

namespace nndag {

/// Pivots at or below this magnitude make log det undefined.
inline constexpr double kPivotFloor = 1e-12;

/// A log-determinant together with the LU it came from.
struct LogDetFactor {
  double logdet = 0.0;
  Eigen::PartialPivLU<Matrix> lu;

  Matrix inverse() const { return lu.inverse(); }
};

/// log det(m) through LU with partial pivoting. Fails unless every pivot
/// exceeds kPivotFloor in magnitude and the determinant is positive.
inline Result<LogDetFactor> factor_logdet(const Matrix& m) {
  if (m.rows() != m.cols()) throw PreconditionError("log det of a non-square matrix");
  if (!m.allFinite()) return DomainViolation::nonfinite;
  LogDetFactor f{0.0, Eigen::PartialPivLU<Matrix>(m)};
  const auto& lu = f.lu.matrixLU();
  // Sign of the row permutation: parity of its transpositions.
  double sign = f.lu.permutationP().determinant();
  double sum = 0.0;
  for (Index i = 0; i < lu.rows(); ++i) {
    const double pivot = lu(i, i);
    if (!(std::abs(pivot) > kPivotFloor)) return DomainViolation::logdet_undefined;
    if (pivot < 0.0) sign = -sign;
    sum += std::log(std::abs(pivot));
  }
  if (sign <= 0.0) return DomainViolation::logdet_undefined;
  f.logdet = sum;
  return f;
}

inline Result<double> logdet(const Matrix& m) {
  auto f = factor_logdet(m);
  if (!f) return f.error();
  return f->logdet;
}

/// exp(w) by Pade scaling and squaring.
inline Matrix matrix_exp(const Matrix& w) {
  if (w.rows() != w.cols()) throw PreconditionError("exp of a non-square matrix");
  return w.exp();
}

struct AcyclicityFn {
  enum class Kind { ldet, mexp, notears, dagma };

  Kind kind = Kind::ldet;
  double s = 1.0;

  static AcyclicityFn ldet(double s = 1.0) { return make(Kind::ldet, s); }
  static AcyclicityFn mexp() { return make(Kind::mexp, 1.0); }
  static AcyclicityFn notears() { return make(Kind::notears, 1.0); }
  static AcyclicityFn dagma(double s = 1.0) { return make(Kind::dagma, s); }

  bool uses_logdet() const { return kind == Kind::ldet || kind == Kind::dagma; }

  std::string_view name() const {
    switch (kind) {
      case Kind::ldet: return "ldet";
      case Kind::mexp: return "mexp";
      case Kind::notears: return "notears";
      case Kind::dagma: return "dagma";
    }
    return "?";
  }

  void validate() const {
    if (!(s > 0.0) || !std::isfinite(s))
      throw ConfigError("acyclicity scale s must be positive");
  }

 private:
  static AcyclicityFn make(Kind k, double s) {
    AcyclicityFn fn;
    fn.kind = k;
    fn.s = s;
    fn.validate();
    return fn;
  }
};

inline AcyclicityFn parse_acyclicity(std::string_view name, double s = 1.0) {
  if (name == "ldet") return AcyclicityFn::ldet(s);
  if (name == "mexp") return AcyclicityFn::mexp();
  if (name == "notears") return AcyclicityFn::notears();
  if (name == "dagma") return AcyclicityFn::dagma(s);
  throw ConfigError("unknown acyclicity function '" + std::string(name) + "'");
}

struct HValueGrad {
  double value = 0.0;
  Matrix grad;
};

namespace detail {

inline Matrix shifted(const AcyclicityFn& fn, const Matrix& a) {
  Matrix m = -a;
  m.diagonal().array() += fn.s;
  return m;
}

inline Matrix acyclicity_argument(const AcyclicityFn& fn, const AdjMatrix& w) {
  using K = AcyclicityFn::Kind;
  return (fn.kind == K::notears || fn.kind == K::dagma)
             ? Matrix(w.cwiseProduct(w))
             : Matrix(w);
}

}  // namespace detail

/// h(w). For ldet the guarantees (h >= 0, h = 0 iff DAG) need w >= 0; that is
/// documented, not checked.
inline Result<double> h_eval(const AcyclicityFn& fn, const AdjMatrix& w) {
  const double d = static_cast<double>(w.rows());
  const Matrix a = detail::acyclicity_argument(fn, w);
  if (fn.uses_logdet()) {
    auto ld = logdet(detail::shifted(fn, a));
    if (!ld) return ld.error();
    return d * std::log(fn.s) - *ld;
  }
  if (!a.allFinite()) return DomainViolation::nonfinite;
  const double value = matrix_exp(a).trace() - d;
  if (!std::isfinite(value)) return DomainViolation::nonfinite;
  return value;
}

/// h(w) and its gradient from a single factorization.
inline Result<HValueGrad> h_value_grad(const AcyclicityFn& fn, const AdjMatrix& w) {
  using K = AcyclicityFn::Kind;
  const double d = static_cast<double>(w.rows());
  const Matrix a = detail::acyclicity_argument(fn, w);
  HValueGrad out;
  if (fn.uses_logdet()) {
    auto f = factor_logdet(detail::shifted(fn, a));
    if (!f) return f.error();
    out.value = d * std::log(fn.s) - f->logdet;
    out.grad = f->inverse().transpose();
  } else {
    if (!a.allFinite()) return DomainViolation::nonfinite;
    const Matrix e = matrix_exp(a);
    out.value = e.trace() - d;
    out.grad = e.transpose();
  }
  if (fn.kind == K::notears || fn.kind == K::dagma)
    out.grad = 2.0 * out.grad.cwiseProduct(w);
  if (!std::isfinite(out.value) || !out.grad.allFinite())
    return DomainViolation::nonfinite;
  return out;
}

inline Result<Matrix> h_grad(const AcyclicityFn& fn, const AdjMatrix& w) {
  auto vg = h_value_grad(fn, w);
  if (!vg) return vg.error();
  return std::move(vg.value().grad);
}

}  // namespace nndag
