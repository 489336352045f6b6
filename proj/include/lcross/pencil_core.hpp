#pragma once

// Spectral evaluation of C(lambda) = A + lambda B.
//
// The discriminant Delta_n(lambda) = prod_{i<j} (xi_i - xi_j)^2 of det(C(lambda) - t I)
// has degree n(n-1) in lambda and overflows doubles beyond n ~ 12, so it is only
// ever carried as (log|Delta|, arg Delta).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "lcross/ensembles.hpp"
#include "lcross/error.hpp"

namespace lcross {

/// Below this normalized left/right overlap the first-order eigenvalue derivative is not trusted.
inline constexpr double kOverlapThreshold = 1e-8;

struct SpectrumAt {
  Complex lambda;
  std::vector<Complex> eigenvalues;
  std::vector<Complex> left_right_overlaps;  // |.| = 1/(||w_i|| ||u_i||) with w_i^* u_i = 1
  std::vector<Complex> derivatives;          // d xi_i / d lambda = w_i^* B u_i
  std::vector<bool> derivative_ok;
};

struct LogDisc {
  double log_abs = 0.0;
  double phase = 0.0;
  bool finite = true;
};

namespace detail {

inline double wrap_phase(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

/// Power-of-two diagonal balancing (Parlett-Reinsch); returns d with D^{-1} M D balanced.
inline Eigen::VectorXd balance(CMatrix& m) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  constexpr double kRadix = 2.0;
  bool converged = false;
  for (int sweep = 0; sweep < 32 && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(m(j, i));
        r += std::abs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / kRadix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= kRadix;
        c *= kRadix * kRadix;
      }
      g = r * kRadix;
      while (c >= g) {
        f /= kRadix;
        c /= kRadix * kRadix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        d(i) *= f;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
  return d;
}

inline CMatrix pencil_at(const Pencil& p, Complex lambda) { return p.a + lambda * p.b; }

[[noreturn]] inline void throw_eig_failure(Complex lambda, const CMatrix& c) {
  std::ostringstream os;
  os << "eigensolver did not converge at lambda=" << lambda << " (||C||_F=" << c.norm() << ")";
  throw NumericalError(os.str());
}

}  // namespace detail

/// Eigenvalues of A + lambda B only.
inline std::vector<Complex> eigenvalues_only(const Pencil& p, Complex lambda) {
  CMatrix c = detail::pencil_at(p, lambda);
  const auto n = c.rows();
  if (n == 1) return {c(0, 0)};
  CMatrix balanced = c;
  detail::balance(balanced);
  Eigen::ComplexEigenSolver<CMatrix> es(balanced, false);
  if (es.info() != Eigen::Success) detail::throw_eig_failure(lambda, c);
  std::vector<Complex> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return out;
}

/// Eigenvalues of A + lambda B with left/right overlap diagnostics and first-order derivatives.
///
/// Left eigenvectors are the rows of V^{-1}, so w_i^* u_i = 1 and d xi_i = w_i^* B u_i.
inline SpectrumAt eigenvalues_at(const Pencil& p, Complex lambda) {
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
    throw InvalidArgument("eigenvalues_at requires finite lambda");
  SpectrumAt s;
  s.lambda = lambda;
  const CMatrix c = detail::pencil_at(p, lambda);
  const auto n = c.rows();
  const auto nn = static_cast<std::size_t>(n);
  s.eigenvalues.resize(nn);
  s.left_right_overlaps.resize(nn);
  s.derivatives.resize(nn);
  s.derivative_ok.assign(nn, true);
  if (n == 1) {
    s.eigenvalues[0] = c(0, 0);
    s.left_right_overlaps[0] = 1.0;
    s.derivatives[0] = p.b(0, 0);
    return s;
  }
  CMatrix balanced = c;
  const Eigen::VectorXd d = detail::balance(balanced);
  Eigen::ComplexEigenSolver<CMatrix> es(balanced, true);
  if (es.info() != Eigen::Success) detail::throw_eig_failure(lambda, c);
  // Undo the balancing: right vectors u = D u', left vectors w^* = w'^* D^{-1}.
  CMatrix v = es.eigenvectors();
  for (Eigen::Index i = 0; i < n; ++i) v.row(i) *= d(i);
  Eigen::PartialPivLU<CMatrix> lu(v);
  const CMatrix w = lu.inverse();  // rows are left eigenvectors
  const CMatrix bv = p.b * v;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    s.eigenvalues[k] = es.eigenvalues()(i);
    const double wn = w.row(i).norm();
    const double vn = v.col(i).norm();
    const double overlap = 1.0 / (wn * vn);
    s.left_right_overlaps[k] = overlap;
    s.derivatives[k] = (w.row(i) * bv.col(i))(0, 0);
    s.derivative_ok[k] = std::isfinite(overlap) && overlap >= kOverlapThreshold &&
                         std::isfinite(std::abs(s.derivatives[k]));
  }
  return s;
}

/// Gap below which two computed eigenvalues are treated as coincident. A defective double
/// eigenvalue is resolved only to about sqrt(eps) ||C||, so this is the working-precision floor.
/// `matrix_scale` (e.g. ||C||_F / sqrt n) keeps the floor meaningful when all eigenvalues
/// coalesce near zero.
inline double coincidence_threshold(const std::vector<Complex>& eigs, double matrix_scale = 0.0) {
  double scale = matrix_scale;
  for (const auto& e : eigs) scale = std::max(scale, std::abs(e));
  return 4.0 * std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(scale, 1e-300);
}

/// log|Delta| and arg Delta from a list of eigenvalues.
inline LogDisc log_discriminant_of(const std::vector<Complex>& eigs, double coincidence = -1.0) {
  LogDisc out;
  const std::size_t n = eigs.size();
  if (n < 2) return out;
  if (coincidence < 0.0) coincidence = coincidence_threshold(eigs);
  double log_abs = 0.0;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Complex d = eigs[i] - eigs[j];
      const double m = std::abs(d);
      if (!(m > coincidence)) {
        out.finite = false;
        out.log_abs = -std::numeric_limits<double>::infinity();
        out.phase = 0.0;
        return out;
      }
      log_abs += 2.0 * std::log(m);
      phase += 2.0 * std::arg(d);
    }
  out.log_abs = log_abs;
  out.phase = detail::wrap_phase(phase);
  return out;
}

inline LogDisc log_discriminant(const Pencil& p, Complex lambda) {
  if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
    throw InvalidArgument("log_discriminant requires finite lambda");
  if (p.n() < 2) return {};
  return log_discriminant_of(eigenvalues_only(p, lambda));
}

struct Decomposition {
  double lhs = 0.0;  // log|Delta| / (n(n-1))
  double rhs = 0.0;  // log(sigma sqrt(n(1+|lambda|^2))) + 2/(n(n-1)) sum_{i<j} log|zeta_i - zeta_j|
};

/// The normalized log-discriminant computed directly and through normalized eigenvalues
/// zeta_k = xi_k / (sigma sqrt(n(1+|lambda|^2))).
inline Decomposition log_discriminant_decomposition(const Pencil& p, Complex lambda, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  const int n = p.n();
  if (n < 2) throw InvalidArgument("decomposition needs n >= 2");
  const auto eigs = eigenvalues_only(p, lambda);
  const LogDisc ld = log_discriminant_of(eigs);
  if (!ld.finite) throw NumericalError("log-discriminant is not finite (multiple eigenvalue)");
  const double pairs = static_cast<double>(n) * (n - 1);
  const double norm = sigma * std::sqrt(n * (1.0 + std::norm(lambda)));
  double energy = 0.0;
  for (std::size_t i = 0; i < eigs.size(); ++i)
    for (std::size_t j = i + 1; j < eigs.size(); ++j)
      energy += std::log(std::abs(eigs[i] / norm - eigs[j] / norm));
  return {ld.log_abs / pairs, std::log(norm) + 2.0 * energy / pairs};
}

/// Thrown when the first-order derivative formula is unreliable at lambda.
class NearDefectiveError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Delta'(lambda)/Delta(lambda) from first-order eigenvalue perturbation.
inline Complex log_disc_derivative_of(const SpectrumAt& s) {
  const std::size_t n = s.eigenvalues.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!s.derivative_ok[i]) throw NearDefectiveError("near-defective eigenvalue; use finite differences");
  Complex sum{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sum += 2.0 * (s.derivatives[i] - s.derivatives[j]) / (s.eigenvalues[i] - s.eigenvalues[j]);
  return sum;
}

inline Complex log_disc_derivative(const Pencil& p, Complex lambda) {
  if (p.b.isZero(0.0)) return {0.0, 0.0};
  return log_disc_derivative_of(eigenvalues_at(p, lambda));
}

/// Central finite difference of log Delta along the real direction (Delta is holomorphic).
inline Complex log_disc_derivative_fd(const Pencil& p, Complex lambda, double rel_step = 1e-6) {
  const double h = rel_step * std::max(1.0, std::abs(lambda));
  const LogDisc plus = log_discriminant(p, lambda + h);
  const LogDisc minus = log_discriminant(p, lambda - h);
  if (!plus.finite || !minus.finite) throw NumericalError("finite difference hit a crossing");
  const double dphase = detail::wrap_phase(plus.phase - minus.phase);
  return Complex{plus.log_abs - minus.log_abs, dphase} / (2.0 * h);
}

}  // namespace lcross
