#pragma once

// Level crossings of A + lambda B: the n(n-1) zeros of the discriminant Delta_n(lambda).
//
// solve_crossings runs an Aberth-Ehrlich simultaneous iteration driven matrix-free by
// Delta'/Delta from eigenvalue perturbation theory. solve_crossings_interp is an
// independent route: sample Delta on a circle, recover the coefficients by an inverse
// DFT and take companion-matrix eigenvalues.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lcross/ensembles.hpp"
#include "lcross/error.hpp"
#include "lcross/geometry.hpp"
#include "lcross/pencil_core.hpp"
#include "lcross/rng.hpp"

namespace lcross {

enum class CrossingMethod { Aberth, Interp, Refined };

inline std::string_view to_string(CrossingMethod m) {
  switch (m) {
    case CrossingMethod::Aberth: return "aberth";
    case CrossingMethod::Interp: return "interp";
    case CrossingMethod::Refined: return "refined";
  }
  return "?";
}

struct CrossingPoint {
  ProjectivePoint lambda;
  int multiplicity = 1;
  double residual = 0.0;  // not meaningful at infinity
  int iterations = 0;
  CrossingMethod method = CrossingMethod::Aberth;
};

struct CrossingSet {
  std::vector<CrossingPoint> points;
  int n = 0;
  int total_count = 0;

  int degree() const { return n * (n - 1); }

  /// Points repeated by multiplicity.
  std::vector<ProjectivePoint> expanded() const {
    std::vector<ProjectivePoint> out;
    out.reserve(static_cast<std::size_t>(total_count));
    for (const auto& p : points)
      for (int m = 0; m < p.multiplicity; ++m) out.push_back(p.lambda);
    return out;
  }

  int infinite_count() const {
    int c = 0;
    for (const auto& p : points)
      if (p.lambda.at_infinity) c += p.multiplicity;
    return c;
  }

  double max_residual() const {
    double r = 0.0;
    for (const auto& p : points)
      if (!p.lambda.at_infinity) r = std::max(r, p.residual);
    return r;
  }
};

struct SolverOptions {
  int max_iters = 300;
  double step_tol = 1e-12;     // |step| < step_tol * max(1, |z|)
  double accept_tol = 1e-6;    // normalized minimal eigenvalue gap
  int restarts = 3;
  double infinity_radius = 1e8;
  int infinity_steps = 5;
  double merge_tol = 1e-7;
};

/// Fewer than n(n-1) validated zeros after all restarts.
class CountDeficitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Sample values of Delta on the interpolation contour span too many orders of magnitude.
class DynamicRangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Normalized minimal eigenvalue gap min_{i<j} |xi_i - xi_j| / sqrt(n (1 + |lambda|^2)).
inline double validate_crossing(const Pencil& p, Complex lambda_star) {
  const auto eigs = eigenvalues_only(p, lambda_star);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < eigs.size(); ++i)
    for (std::size_t j = i + 1; j < eigs.size(); ++j) gap = std::min(gap, std::abs(eigs[i] - eigs[j]));
  return gap / std::sqrt(p.n() * (1.0 + std::norm(lambda_star)));
}

/// The pencil (uA + vB, -conj(v) A + conj(u) B).
inline Pencil mobius_pencil(const Pencil& p, Complex u, Complex v) {
  require_unit(u, v);
  Pencil out = p;
  out.a = u * p.a + v * p.b;
  out.b = -std::conj(v) * p.a + std::conj(u) * p.b;
  return out;
}

/// Symmetric Hausdorff distance between two point multisets in the chordal metric.
inline double hausdorff_distance(const std::vector<ProjectivePoint>& a,
                                 const std::vector<ProjectivePoint>& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : 1.0;
  auto directed = [](const std::vector<ProjectivePoint>& from, const std::vector<ProjectivePoint>& to) {
    double worst = 0.0;
    for (const auto& x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : to) best = std::min(best, chordal_distance(x, y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

inline double hausdorff_distance(const CrossingSet& a, const CrossingSet& b) {
  return hausdorff_distance(a.expanded(), b.expanded());
}

namespace detail {

enum class LogDerivStatus { Ok, AtRoot };

struct LogDeriv {
  Complex value;
  LogDerivStatus status = LogDerivStatus::Ok;
};

/// Delta'/Delta at z. Coincident or near-defective eigenvalues both mean z is within working
/// precision of a crossing (a condition number of 1e8 needs a gap near sqrt(eps) ||C||), so
/// such points are reported as roots and left to validation.
inline LogDeriv evaluate_log_deriv(const Pencil& p, Complex z) {
  const SpectrumAt s = eigenvalues_at(p, z);
  const double scale = pencil_at(p, z).norm() / std::sqrt(static_cast<double>(p.n()));
  const double floor = coincidence_threshold(s.eigenvalues, scale);
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    for (std::size_t j = i + 1; j < s.eigenvalues.size(); ++j)
      if (!(std::abs(s.eigenvalues[i] - s.eigenvalues[j]) > floor))
        return {Complex{}, LogDerivStatus::AtRoot};
  const bool ok = std::all_of(s.derivative_ok.begin(), s.derivative_ok.end(), [](bool b) { return b; });
  if (!ok) return {Complex{}, LogDerivStatus::AtRoot};
  return {log_disc_derivative_of(s), LogDerivStatus::Ok};
}

/// Number of zeros of Delta inside |lambda - center| < radius by the argument principle.
inline double zeros_in_disk(const Pencil& p, Complex center, double radius, int samples = 32) {
  Complex acc{0.0, 0.0};
  for (int m = 0; m < samples; ++m) {
    const Complex e = std::polar(1.0, 2.0 * std::numbers::pi * m / samples);
    const LogDeriv d = evaluate_log_deriv(p, center + radius * e);
    if (d.status == LogDerivStatus::AtRoot) return std::numeric_limits<double>::quiet_NaN();
    acc += d.value * radius * e;
  }
  return (acc / static_cast<double>(samples)).real();
}

/// n(n-1) starting points: a generalized spiral on the sphere pulled back stereographically.
inline std::vector<Complex> spiral_start(int count, double azimuth_offset) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Complex> z(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double h = -1.0 + (2.0 * k + 1.0) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - h * h));
    const double a = golden * k + azimuth_offset;
    const Complex xy = std::polar(rho, a);
    z[static_cast<std::size_t>(k)] = xy / (1.0 - h);
  }
  return z;
}

struct AberthOutcome {
  std::vector<Complex> z;
  std::vector<bool> at_infinity;
  std::vector<int> iterations;
  bool converged = false;
  int sweeps = 0;
};

inline AberthOutcome aberth_sweeps(const Pencil& p, std::vector<Complex> z, const SolverOptions& opts) {
  const std::size_t count = z.size();
  AberthOutcome out;
  out.at_infinity.assign(count, false);
  out.iterations.assign(count, 0);
  std::vector<bool> done(count, false);
  std::vector<int> far(count, 0);
  std::vector<Complex> step(count);
  for (int it = 0; it < opts.max_iters; ++it) {
    out.sweeps = it + 1;
    // Jacobi update: every correction uses the previous sweep's approximations.
    for (std::size_t k = 0; k < count; ++k) {
      if (done[k]) continue;
      const LogDeriv d = evaluate_log_deriv(p, z[k]);
      if (d.status == LogDerivStatus::AtRoot) {
        step[k] = 0.0;
        continue;
      }
      Complex repulsion{0.0, 0.0};
      for (std::size_t j = 0; j < count; ++j)
        if (j != k && !out.at_infinity[j]) repulsion += 1.0 / (z[k] - z[j]);
      step[k] = 1.0 / (d.value - repulsion);
    }
    bool all_done = true;
    for (std::size_t k = 0; k < count; ++k) {
      if (done[k]) continue;
      ++out.iterations[k];
      const double mag = std::max(1.0, std::abs(z[k]));
      z[k] -= step[k];
      if (!std::isfinite(z[k].real()) || !std::isfinite(z[k].imag())) {
        out.at_infinity[k] = true;
        done[k] = true;
        continue;
      }
      if (std::abs(step[k]) < opts.step_tol * mag) {
        // A relative step can stall far out, where Delta'/Delta and the repulsion both decay.
        out.at_infinity[k] = std::abs(z[k]) > opts.infinity_radius;
        done[k] = true;
        continue;
      }
      far[k] = std::abs(z[k]) > opts.infinity_radius ? far[k] + 1 : 0;
      if (far[k] >= opts.infinity_steps) {
        out.at_infinity[k] = true;
        done[k] = true;
        continue;
      }
      all_done = false;
    }
    if (all_done) {
      out.converged = true;
      break;
    }
  }
  out.z = std::move(z);
  return out;
}

struct Assembled {
  std::vector<CrossingPoint> points;
  std::string failure;
};

inline Assembled assemble(const Pencil& p, const AberthOutcome& run, const SolverOptions& opts) {
  Assembled out;
  const std::size_t count = run.z.size();
  if (!run.converged) {
    out.failure = "iteration did not converge within max_iters";
    return out;
  }
  // Cluster finite iterates.
  std::vector<int> cluster(count, -1);
  std::vector<std::vector<std::size_t>> groups;
  int infinite = 0;
  int max_inf_iters = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (run.at_infinity[k]) {
      ++infinite;
      max_inf_iters = std::max(max_inf_iters, run.iterations[k]);
      continue;
    }
    if (cluster[k] >= 0) continue;
    cluster[k] = static_cast<int>(groups.size());
    groups.push_back({k});
    for (std::size_t j = k + 1; j < count; ++j) {
      if (run.at_infinity[j] || cluster[j] >= 0) continue;
      const double tol = opts.merge_tol * std::max(1.0, std::abs(run.z[k]));
      if (std::abs(run.z[j] - run.z[k]) < tol) {
        cluster[j] = cluster[k];
        groups.back().push_back(j);
      }
    }
  }
  double max_finite = 0.0;
  for (const auto& g : groups) {
    CrossingPoint cp;
    Complex centre{0.0, 0.0};
    int iters = 0;
    for (auto k : g) {
      centre += run.z[k];
      iters = std::max(iters, run.iterations[k]);
    }
    centre /= static_cast<double>(g.size());
    cp.lambda = ProjectivePoint{centre};
    cp.multiplicity = static_cast<int>(g.size());
    cp.iterations = iters;
    cp.method = CrossingMethod::Aberth;
    cp.residual = validate_crossing(p, centre);
    if (!(cp.residual < opts.accept_tol)) {
      std::ostringstream os;
      os << "crossing at " << centre << " failed validation (residual " << cp.residual << ")";
      out.failure = os.str();
      return out;
    }
    if (cp.multiplicity > 1) {
      const double r = 1e-5 * std::max(1.0, std::abs(centre));
      const double m = zeros_in_disk(p, centre, r);
      if (!(std::abs(m - cp.multiplicity) < 0.25)) {
        std::ostringstream os;
        os << "cluster of " << cp.multiplicity << " iterates at " << centre
           << " encloses " << m << " zeros";
        out.failure = os.str();
        return out;
      }
    }
    max_finite = std::max(max_finite, std::abs(centre));
    out.points.push_back(cp);
  }
  if (infinite > 0) {
    // Zeros at infinity of Delta are zeros at mu = 0 of the reversed pencil (B, -A).
    const Pencil reversed = mobius_pencil(p, Complex{0.0, 0.0}, Complex{1.0, 0.0});
    const double r = std::min(1e-3, 0.1 / std::max(1.0, max_finite));
    const double m = zeros_in_disk(reversed, Complex{0.0, 0.0}, r);
    if (!(std::abs(m - infinite) < 0.25)) {
      std::ostringstream os;
      os << infinite << " iterates escaped to infinity but the reversed pencil has " << m
         << " zeros at the origin";
      out.failure = os.str();
      return out;
    }
    CrossingPoint cp;
    cp.lambda = ProjectivePoint::infinity();
    cp.multiplicity = infinite;
    cp.iterations = max_inf_iters;
    cp.residual = 0.0;
    out.points.push_back(cp);
  }
  return out;
}

}  // namespace detail

/// All n(n-1) level crossings of the pencil, counted with multiplicity.
inline CrossingSet solve_crossings(const Pencil& p, const SolverOptions& opts = {}) {
  const int n = p.n();
  if (n < 2) throw InvalidArgument("solve_crossings needs n >= 2");
  if (p.b.isZero(0.0)) throw InvalidArgument("degenerate pencil: B = 0");
  const int degree = n * (n - 1);
  std::string last_failure;
  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    std::vector<Complex> start;
    if (attempt == 0) {
      start = detail::spiral_start(degree, 0.5);
    } else {
      PhiloxStream rng(p.seed_tag, 0x5245535441525400ULL + static_cast<std::uint64_t>(attempt));
      start = detail::spiral_start(degree, 2.0 * std::numbers::pi * rng.uniform());
      for (auto& z : start) z *= 1.0 + 0.2 * rng.complex_normal(0.5);
    }
    const auto run = detail::aberth_sweeps(p, std::move(start), opts);
    auto assembled = detail::assemble(p, run, opts);
    if (assembled.failure.empty()) {
      CrossingSet out;
      out.n = n;
      out.points = std::move(assembled.points);
      out.total_count = 0;
      for (const auto& cp : out.points) out.total_count += cp.multiplicity;
      if (out.total_count == degree) return out;
      last_failure = "count mismatch";
    } else {
      last_failure = assembled.failure;
    }
  }
  std::ostringstream os;
  os << "count deficit: fewer than " << degree << " validated crossings after " << opts.restarts
     << " restarts (n=" << n << ", seed_tag=" << p.seed_tag << "): " << last_failure;
  throw CountDeficitError(os.str());
}

namespace detail {

/// Eigenvalues of the companion matrix of sum_k c_k s^k (c.back() != 0), with balancing.
inline std::vector<Complex> companion_roots(const std::vector<Complex>& c) {
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};
  if (deg == 1) return {-c[0] / c[1]};
  CMatrix m = CMatrix::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) m(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) m(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  balance(m);
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigensolver failed");
  std::vector<Complex> roots(static_cast<std::size_t>(deg));
  for (int i = 0; i < deg; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return roots;
}

}  // namespace detail

struct InterpOptions {
  double max_log_spread = 600.0;
  double trim_tol = 1e3 * std::numeric_limits<double>::epsilon();
  /// Polish the roots by deflated Newton steps on Delta'/Delta (marks points as `refined`).
  bool polish = false;
  int polish_sweeps = 50;
};

/// Crossings from interpolation of Delta on the circle |lambda| = radius.
inline CrossingSet solve_crossings_interp(const Pencil& p, double radius, const InterpOptions& opts = {}) {
  const int n = p.n();
  if (n < 2) throw InvalidArgument("solve_crossings_interp needs n >= 2");
  if (n > 12) throw InvalidArgument("solve_crossings_interp is limited to n <= 12");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const int degree = n * (n - 1);
  int samples = 1;
  while (samples <= degree) samples *= 2;

  std::vector<LogDisc> values(static_cast<std::size_t>(samples));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double mean = 0.0;
  for (int m = 0; m < samples; ++m) {
    const Complex z = std::polar(radius, 2.0 * std::numbers::pi * m / samples);
    const LogDisc ld = log_discriminant(p, z);
    if (!ld.finite) throw NumericalError("interpolation contour passes through a crossing; change radius");
    values[static_cast<std::size_t>(m)] = ld;
    lo = std::min(lo, ld.log_abs);
    hi = std::max(hi, ld.log_abs);
    mean += ld.log_abs;
  }
  mean /= samples;
  if (hi - lo > opts.max_log_spread) {
    std::ostringstream os;
    os << "log-magnitude spread " << (hi - lo) << " on radius " << radius << " exceeds "
       << opts.max_log_spread << "; choose another radius";
    throw DynamicRangeError(os.str());
  }
  // Dividing by the geometric mean of |Delta| does not move zeros.
  std::vector<Complex> v(static_cast<std::size_t>(samples));
  for (int m = 0; m < samples; ++m) {
    const auto& ld = values[static_cast<std::size_t>(m)];
    v[static_cast<std::size_t>(m)] = std::polar(std::exp(ld.log_abs - mean), ld.phase);
  }
  // Inverse DFT gives d_k = c_k radius^k for the scaled variable s = lambda / radius.
  std::vector<Complex> d(static_cast<std::size_t>(degree) + 1);
  for (int k = 0; k <= degree; ++k) {
    Complex acc{0.0, 0.0};
    for (int m = 0; m < samples; ++m)
      acc += v[static_cast<std::size_t>(m)] *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(m) * k) % samples) / samples);
    d[static_cast<std::size_t>(k)] = acc / static_cast<double>(samples);
  }
  double dmax = 0.0;
  for (const auto& c : d) dmax = std::max(dmax, std::abs(c));
  int top = degree;
  while (top > 0 && std::abs(d[static_cast<std::size_t>(top)]) <= opts.trim_tol * dmax) --top;
  d.resize(static_cast<std::size_t>(top) + 1);
  const auto roots = detail::companion_roots(d);

  std::vector<Complex> z(roots.size());
  for (std::size_t k = 0; k < roots.size(); ++k) z[k] = radius * roots[k];
  std::vector<int> iterations(z.size(), 0);
  if (opts.polish) {
    // Newton with implicit deflation (Maehly): each root is corrected against the current
    // estimates of all others, so polished roots cannot collapse onto one another.
    std::vector<bool> done(z.size(), false);
    for (int sweep = 0; sweep < opts.polish_sweeps; ++sweep) {
      bool all_done = true;
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (done[k]) continue;
        const auto ld = detail::evaluate_log_deriv(p, z[k]);
        if (ld.status == detail::LogDerivStatus::AtRoot) {
          done[k] = true;
          continue;
        }
        Complex deflate{0.0, 0.0};
        for (std::size_t j = 0; j < z.size(); ++j)
          if (j != k) deflate += 1.0 / (z[k] - z[j]);
        const Complex step = 1.0 / (ld.value - deflate);
        z[k] -= step;
        iterations[k] = sweep + 1;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z[k])))
          done[k] = true;
        else
          all_done = false;
      }
      if (all_done) break;
    }
  }

  CrossingSet out;
  out.n = n;
  for (std::size_t k = 0; k < z.size(); ++k) {
    CrossingPoint cp;
    cp.method = opts.polish ? CrossingMethod::Refined : CrossingMethod::Interp;
    cp.iterations = iterations[k];
    cp.lambda = ProjectivePoint{z[k]};
    cp.residual = validate_crossing(p, z[k]);
    out.points.push_back(cp);
  }
  if (top < degree) {
    CrossingPoint cp;
    cp.lambda = ProjectivePoint::infinity();
    cp.multiplicity = degree - top;
    cp.method = CrossingMethod::Interp;
    out.points.push_back(cp);
  }
  out.total_count = 0;
  for (const auto& cp : out.points) out.total_count += cp.multiplicity;
  return out;
}

}  // namespace lcross
