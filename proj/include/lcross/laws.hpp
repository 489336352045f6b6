#pragma once

// Reference laws on CP^1 and in the plane, logarithmic energies, and the candidate
// Hermitian limit density
//
//   Psi(lambda) = (1/2 pi) Laplacian[ 1/2 log(1+|lambda|^2) + G(1 - Y^2) ],
//
// where G(q) is the logarithmic energy of the elliptic law with parameter sqrt(q).
//
// The elliptic law mu_tau is the uniform probability measure on the ellipse with
// semi-axes 1+tau and 1-tau (tau = 0 is the circular law).

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lcross/error.hpp"
#include "lcross/geometry.hpp"
#include "lcross/parallel.hpp"

namespace lcross {

namespace quad {

/// Adaptive Gauss-Kronrod (7/15) on [a, b].
template <class F>
double integrate(F&& f, double a, double b, double tol, unsigned max_depth = 15) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, tol, &err);
}

}  // namespace quad

// ---------------------------------------------------------------------------
// Closed-form densities.

/// Uniform law on CP^1 in the affine chart: 1 / (pi (1+|lambda|^2)^2).
inline double uniform_density(Complex lambda) {
  const double d = 1.0 + std::norm(lambda);
  return 1.0 / (std::numbers::pi * d * d);
}

/// Level-crossing density of GUE_2 pencils: (4/pi) |y| / (1+|lambda|^2)^3.
inline double gue2_density(Complex lambda) {
  const double d = 1.0 + std::norm(lambda);
  return 4.0 / std::numbers::pi * std::abs(lambda.imag()) / (d * d * d);
}

/// Density with respect to sphere area, given a density with respect to dx dy.
/// The unit sphere's area element is 4 dx dy / (1+|lambda|^2)^2.
inline double plane_to_sphere_density(double plane_density, Complex lambda) {
  const double d = 1.0 + std::norm(lambda);
  return plane_density * d * d / 4.0;
}

inline void require_elliptic_parameter(double tau_abs) {
  if (!(tau_abs >= 0.0) || !(tau_abs < 1.0))
    throw InvalidArgument("elliptic parameter must satisfy 0 <= tau < 1");
}

/// Uniform density on the ellipse with semi-axes 1+tau (real) and 1-tau (imaginary).
inline double elliptic_density(double tau_abs, Complex z) {
  require_elliptic_parameter(tau_abs);
  const double a = 1.0 + tau_abs;
  const double b = 1.0 - tau_abs;
  const double r = (z.real() / a) * (z.real() / a) + (z.imag() / b) * (z.imag() / b);
  return r <= 1.0 ? 1.0 / (std::numbers::pi * a * b) : 0.0;
}

// ---------------------------------------------------------------------------
// Planar laws with compact support inside an axis-aligned ellipse.

struct PlanarLaw {
  std::function<double(Complex)> density;
  double semi_x = 1.0;  // support contained in (x/semi_x)^2 + (y/semi_y)^2 <= 1
  double semi_y = 1.0;
  /// When positive, the density equals this constant on the whole support ellipse.
  double uniform_value = 0.0;
};

inline PlanarLaw circular_law() {
  return {[](Complex z) { return std::norm(z) <= 1.0 ? 1.0 / std::numbers::pi : 0.0; }, 1.0, 1.0,
          1.0 / std::numbers::pi};
}

inline PlanarLaw elliptic_law(double tau_abs) {
  require_elliptic_parameter(tau_abs);
  return {[tau_abs](Complex z) { return elliptic_density(tau_abs, z); }, 1.0 + tau_abs, 1.0 - tau_abs,
          1.0 / (std::numbers::pi * (1.0 - tau_abs * tau_abs))};
}

/// Integral of f(z) rho(z) over the support chart z = (a r cos t, b r sin t).
template <class F>
double integrate_planar(const PlanarLaw& law, F&& f, double tol) {
  const double a = law.semi_x, b = law.semi_y;
  auto radial = [&](double r) {
    auto angular = [&](double t) {
      const Complex z{a * r * std::cos(t), b * r * std::sin(t)};
      return law.density(z) * f(z);
    };
    return a * b * r * quad::integrate(angular, 0.0, 2.0 * std::numbers::pi, tol, 10);
  };
  return quad::integrate(radial, 0.0, 1.0, tol, 10);
}

inline double total_mass(const PlanarLaw& law, double tol = 1e-10) {
  return integrate_planar(law, [](Complex) { return 1.0; }, tol);
}

/// Two-sided truncation max(log delta, min(log |d|, log R)) of the logarithmic kernel.
inline double truncated_log(double distance, double delta, double big_r) {
  return std::max(std::log(delta), std::min(std::log(distance), std::log(big_r)));
}

namespace detail {

/// Distance from an interior point p along direction e^{i theta} to the support ellipse.
inline double ray_exit(const PlanarLaw& law, Complex p, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double ia2 = 1.0 / (law.semi_x * law.semi_x), ib2 = 1.0 / (law.semi_y * law.semi_y);
  const double qa = c * c * ia2 + s * s * ib2;
  const double qb = 2.0 * (p.real() * c * ia2 + p.imag() * s * ib2);
  const double qc = p.real() * p.real() * ia2 + p.imag() * p.imag() * ib2 - 1.0;
  const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
  // Stable root of the quadratic for the positive exit distance.
  const double root = std::sqrt(disc);
  if (qb >= 0.0) return (-2.0 * qc) / (qb + root);
  return (-qb + root) / (2.0 * qa);
}

}  // namespace detail

/// Radial integral of Phi_{delta,R}(s) s ds over [0, exit] when R exceeds the support diameter.
inline double truncated_log_moment(double exit, double delta) {
  const double log_delta = std::log(delta);
  if (exit <= delta) return 0.5 * log_delta * exit * exit;
  return 0.5 * exit * exit * std::log(exit) - 0.25 * exit * exit + 0.25 * delta * delta;
}

/// U(z) = integral of Phi_{delta,R}(z, w) rho(w) dw in polar coordinates centred at z.
inline double truncated_potential(const PlanarLaw& law, Complex z, double delta, double big_r, double tol) {
  const double log_delta = std::log(delta);
  const double diameter = 2.0 * std::max(law.semi_x, law.semi_y);
  if (law.uniform_value > 0.0 && big_r >= diameter) {
    auto angular = [&](double theta) { return truncated_log_moment(detail::ray_exit(law, z, theta), delta); };
    return law.uniform_value * quad::integrate(angular, 0.0, 2.0 * std::numbers::pi, tol, 12);
  }
  auto angular = [&](double theta) {
    const double exit = detail::ray_exit(law, z, theta);
    const Complex dir = std::polar(1.0, theta);
    auto radial = [&](double s) { return truncated_log(s, delta, big_r) * law.density(z + s * dir) * s; };
    auto core = [&](double s) { return log_delta * law.density(z + s * dir) * s; };
    if (exit <= delta) return quad::integrate(core, 0.0, exit, tol, 6);
    return quad::integrate(core, 0.0, delta, tol, 6) + quad::integrate(radial, delta, exit, tol, 8);
  };
  return quad::integrate(angular, 0.0, 2.0 * std::numbers::pi, tol, 8);
}

struct EnergyEstimate {
  double value = 0.0;                    // delta -> 0 extrapolation
  std::vector<double> deltas;            // truncation levels used
  std::vector<double> truncated_values;  // energy with Phi_{delta,R}
};

/// Logarithmic energy of a compactly supported planar law:
/// the Phi_{delta,R} energy at delta in {1e-2, 1e-3, 1e-4}, extrapolated in delta^2.
inline EnergyEstimate log_energy_detail(const PlanarLaw& law, double tol = 1e-7) {
  const double big_r = 2.0 * std::max(law.semi_x, law.semi_y) + 1.0;
  EnergyEstimate est;
  est.deltas = {1e-2, 1e-3, 1e-4};
  for (double delta : est.deltas) {
    const double e = integrate_planar(
        law, [&](Complex z) { return truncated_potential(law, z, delta, big_r, tol); }, tol);
    est.truncated_values.push_back(e);
  }
  // The lower truncation raises the energy by (pi/2) delta^2 int rho^2 + o(delta^2).
  const double d2 = est.deltas[1] * est.deltas[1], d3 = est.deltas[2] * est.deltas[2];
  const double e2 = est.truncated_values[1], e3 = est.truncated_values[2];
  est.value = e3 + (e3 - e2) * d3 / (d2 - d3);
  return est;
}

inline double log_energy(const PlanarLaw& law, double tol = 1e-7) { return log_energy_detail(law, tol).value; }

// ---------------------------------------------------------------------------
// Energy table G(q) and interpolation.

/// Natural cubic spline through (x_i, y_i), x increasing.
class NaturalSpline {
 public:
  NaturalSpline() = default;
  NaturalSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InvalidArgument("spline needs at least two matching nodes");
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> sub(n, 0.0), diag(n, 1.0), sup(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      sub[i] = h0;
      diag[i] = 2.0 * (h0 + h1);
      sup[i] = h1;
      rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    // Thomas algorithm with m_0 = m_{n-1} = 0.
    for (std::size_t i = 1; i < n; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 1;) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
    m_[0] = 0.0;
  }

  double operator()(double t) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

 private:
  std::vector<double> x_, y_, m_;
};

struct EnergyTable {
  std::vector<double> q_grid;
  std::vector<double> g_values;
  double quadrature_tol = 1e-5;

  double q_min() const { return q_grid.front(); }
  double q_max() const { return q_grid.back(); }

  /// Largest jump between neighbouring grid values.
  double max_neighbor_jump() const {
    double j = 0.0;
    for (std::size_t i = 1; i < g_values.size(); ++i) j = std::max(j, std::abs(g_values[i] - g_values[i - 1]));
    return j;
  }

  NaturalSpline spline() const { return NaturalSpline(q_grid, g_values); }
};

/// Bulk grid q in [0, 1 - eps] with `points` equally spaced nodes.
inline std::vector<double> default_q_grid(double eps = 0.05, int points = 20) {
  std::vector<double> q(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) q[static_cast<std::size_t>(i)] = (1.0 - eps) * i / (points - 1);
  return q;
}

/// G(q) = energy of the elliptic law with parameter sqrt(q), one quadrature per node.
inline EnergyTable build_energy_table(const std::vector<double>& q_grid, double tol = 1e-5, unsigned threads = 1) {
  if (q_grid.size() < 2) throw InvalidArgument("energy table needs at least two grid points");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] >= 0.0 && q_grid[i] < 1.0)) throw InvalidArgument("energy table grid must lie in [0,1)");
    if (i > 0 && !(q_grid[i] > q_grid[i - 1])) throw InvalidArgument("energy table grid must be increasing");
  }
  EnergyTable t;
  t.q_grid = q_grid;
  t.quadrature_tol = tol;
  t.g_values.resize(q_grid.size());
  parallel_for(q_grid.size(), threads,
               [&](std::size_t i) { t.g_values[i] = log_energy(elliptic_law(std::sqrt(q_grid[i])), tol); });
  return t;
}

inline void write_energy_table_csv(const EnergyTable& t, std::ostream& os) {
  os << "q,G,tol\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < t.q_grid.size(); ++i)
    os << t.q_grid[i] << ',' << t.g_values[i] << ',' << t.quadrature_tol << '\n';
}

inline EnergyTable read_energy_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("q,G,tol", 0) != 0)
    throw InvalidArgument("energy table CSV must start with header 'q,G,tol'");
  EnergyTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double q, g, tol;
    char c1, c2;
    if (!(ls >> q >> c1 >> g >> c2 >> tol) || c1 != ',' || c2 != ',')
      throw InvalidArgument("malformed energy table row: " + line);
    t.q_grid.push_back(q);
    t.g_values.push_back(g);
    t.quadrature_tol = tol;
  }
  if (t.q_grid.size() < 2) throw InvalidArgument("energy table CSV has fewer than two rows");
  return t;
}

// ---------------------------------------------------------------------------
// Candidate Hermitian limit Psi.

/// The potential F(lambda) = 1/2 log(1+|lambda|^2) + G(q(lambda)).
inline double psi_potential(Complex lambda, const NaturalSpline& g) {
  return 0.5 * std::log1p(std::norm(lambda)) + g(q_of_lambda(lambda));
}

/// Psi(lambda) by a Richardson-extrapolated five-point Laplacian of F.
///
/// The stencil step is h = 1e-3 max(1, |lambda|). Requires Im lambda != 0 and q(lambda)
/// inside the table's q range; stencil points just past the range use the end cubic.
inline double psi_density(Complex lambda, const EnergyTable& table, const NaturalSpline& g) {
  if (lambda.imag() == 0.0) throw InvalidArgument("psi_density is undefined on the real axis");
  const double h = 1e-3 * std::max(1.0, std::abs(lambda));
  auto check = [&](Complex p) {
    const double q = q_of_lambda(p);
    if (q > table.q_max() || q < table.q_min())
      throw InvalidArgument("psi_density: lambda outside the energy table coverage");
  };
  auto laplacian = [&](double step) {
    const Complex dx{step, 0.0}, dy{0.0, step};
    return (psi_potential(lambda + dx, g) + psi_potential(lambda - dx, g) + psi_potential(lambda + dy, g) +
            psi_potential(lambda - dy, g) - 4.0 * psi_potential(lambda, g)) /
           (step * step);
  };
  check(lambda);
  const double coarse = laplacian(h);
  const double fine = laplacian(0.5 * h);
  return (4.0 * fine - coarse) / 3.0 / (2.0 * std::numbers::pi);
}

inline double psi_density(Complex lambda, const EnergyTable& table) {
  return psi_density(lambda, table, table.spline());
}

// ---------------------------------------------------------------------------
// Law descriptors.

enum class LawId { UniformCP1, Gue2, Circular, Elliptic, Psi };

struct LawSpec {
  LawId id = LawId::UniformCP1;
  double tau = 0.0;                           // elliptic
  std::shared_ptr<const EnergyTable> energy;  // psi
  bool normalization_checked = false;

  bool is_sphere_law() const { return id == LawId::UniformCP1 || id == LawId::Gue2 || id == LawId::Psi; }

  /// Density in the law's natural coordinates: dx dy in the affine chart for sphere laws,
  /// the plane for circular and elliptic laws.
  double density(Complex p) const {
    switch (id) {
      case LawId::UniformCP1: return uniform_density(p);
      case LawId::Gue2: return gue2_density(p);
      case LawId::Circular: return elliptic_density(0.0, p);
      case LawId::Elliptic: return elliptic_density(tau, p);
      case LawId::Psi: return psi_density(p, *energy);
    }
    return 0.0;
  }
};

inline LawSpec uniform_cp1_law() { return {LawId::UniformCP1}; }
inline LawSpec gue2_law() { return {LawId::Gue2}; }
inline LawSpec circular_law_spec() { return {LawId::Circular}; }
inline LawSpec elliptic_law_spec(double tau_abs) {
  require_elliptic_parameter(tau_abs);
  return {LawId::Elliptic, tau_abs};
}
inline LawSpec psi_law(std::shared_ptr<const EnergyTable> table) {
  LawSpec l{LawId::Psi};
  l.energy = std::move(table);
  return l;
}

/// Density of a sphere law with respect to sphere area at the point (x, y, z).
inline double sphere_density(const LawSpec& law, double x, double y, double z) {
  if (!law.is_sphere_law()) throw InvalidArgument("sphere_density needs a law on CP^1");
  switch (law.id) {
    case LawId::UniformCP1: return 1.0 / (4.0 * std::numbers::pi);
    case LawId::Gue2: return std::abs(y) / (2.0 * std::numbers::pi);
    default: break;
  }
  const SpherePoint s = make_sphere_point(x, y, z);
  const ProjectivePoint p = from_sphere(s);
  if (p.at_infinity) throw InvalidArgument("sphere_density: point at infinity is not evaluable");
  return plane_to_sphere_density(law.density(p.value), p.value);
}

/// Density of |Y| at t in (0,1]: the circle {y = +-t} integrated in the Archimedes chart
/// (x, y, z) = (sqrt(1-y^2) cos a, y, sqrt(1-y^2) sin a), where dA = da dy.
inline double absY_density(const LawSpec& law, double t, double tol = 1e-9) {
  const double rho = std::sqrt(std::max(0.0, 1.0 - t * t));
  auto ring = [&](double y) {
    // Offset the angular grid so no node lands on the pole at infinity (a = pi/2, y = 0).
    return quad::integrate(
        [&](double a) { return sphere_density(law, rho * std::cos(a), y, rho * std::sin(a)); }, 0.1,
        0.1 + 2.0 * std::numbers::pi, tol, 10);
  };
  return ring(t) + ring(-t);
}

/// P(|Y| <= t). Closed form for the uniform law; quadrature of the density otherwise.
inline double absY_cdf(const LawSpec& law, double t, double tol = 1e-9) {
  if (!law.is_sphere_law()) throw InvalidArgument("absY_cdf needs a law on CP^1");
  t = std::clamp(t, 0.0, 1.0);
  if (law.id == LawId::UniformCP1) return t;
  if (t == 0.0) return 0.0;
  return quad::integrate([&](double s) { return absY_density(law, s, tol); }, 0.0, t, tol, 15);
}

/// P(|Y| <= t) precomputed on an even grid of [0, 1] and interpolated linearly; for
/// goodness-of-fit tests on many samples.
class TabulatedCdf {
 public:
  TabulatedCdf(const LawSpec& law, int nodes = 2049, double tol = 1e-10) {
    if (nodes < 2) throw InvalidArgument("TabulatedCdf needs at least two nodes");
    if (!law.is_sphere_law()) throw InvalidArgument("TabulatedCdf needs a law on CP^1");
    values_.assign(static_cast<std::size_t>(nodes), 0.0);
    step_ = 1.0 / (nodes - 1);
    for (int k = 1; k < nodes; ++k)
      values_[static_cast<std::size_t>(k)] =
          values_[static_cast<std::size_t>(k - 1)] +
          quad::integrate([&](double s) { return absY_density(law, s, tol); }, (k - 1) * step_, k * step_, tol, 10);
  }

  double operator()(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return values_.back();
    const double u = t / step_;
    const auto k = std::min(static_cast<std::size_t>(u), values_.size() - 2);
    const double f = u - static_cast<double>(k);
    return (1.0 - f) * values_[k] + f * values_[k + 1];
  }

  double total() const { return values_.back(); }

 private:
  std::vector<double> values_;
  double step_ = 1.0;
};

/// Total mass by quadrature; for Psi only the part of the sphere covered by the table.
inline double law_total_mass(const LawSpec& law, double tol = 1e-9) {
  switch (law.id) {
    case LawId::UniformCP1:
      return quad::integrate([&](double s) { return absY_density(law, s, tol); }, 0.0, 1.0, tol, 15);
    case LawId::Gue2: return absY_cdf(law, 1.0, tol);
    case LawId::Circular: return total_mass(circular_law());
    case LawId::Elliptic: return total_mass(elliptic_law(law.tau));
    case LawId::Psi: {
      const double y_min = std::sqrt(1.0 - law.energy->q_max()) + 1e-9;
      return quad::integrate([&](double s) { return absY_density(law, s, tol); }, y_min, 1.0, tol, 15);
    }
  }
  return 0.0;
}

inline LawSpec checked(LawSpec law, double tol = 1e-6) {
  if (law.id != LawId::Psi) {
    const double m = law_total_mass(law);
    if (std::abs(m - 1.0) > tol) throw NumericalError("law does not integrate to one");
  }
  law.normalization_checked = true;
  return law;
}

}  // namespace lcross
