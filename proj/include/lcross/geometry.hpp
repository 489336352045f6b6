#pragma once

// Charts on CP^1.
//
// Stereographic convention: lambda = 0 maps to the south pole (0,0,-1) and
// lambda = infinity to the north pole, so the sphere height z equals the
// cylindrical coordinate Z in which the uniform law has density 1/(4 pi)
// in (phi, Z). The real projective line is the great circle y = 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>

#include "lcross/error.hpp"

namespace lcross {

using Complex = std::complex<double>;

/// A point of CP^1 in the affine chart, or the point at infinity.
struct ProjectivePoint {
  Complex value{0.0, 0.0};
  bool at_infinity = false;

  static ProjectivePoint infinity() { return {Complex{}, true}; }
  ProjectivePoint() = default;
  ProjectivePoint(Complex v, bool inf = false) : value(v), at_infinity(inf) {}
};

struct SpherePoint {
  double x = 0.0;
  double y = 0.0;
  double z = -1.0;
  double phi = 0.0;  // azimuth in [0, 2 pi)
  double zc = -1.0;  // cylindrical height, equal to z
};

inline SpherePoint make_sphere_point(double x, double y, double z) {
  double phi = std::atan2(y, x);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  if (phi >= 2.0 * std::numbers::pi) phi = 0.0;
  return {x, y, z, phi, z};
}

inline SpherePoint to_sphere(const ProjectivePoint& p) {
  if (p.at_infinity) return make_sphere_point(0.0, 0.0, 1.0);
  const Complex l = p.value;
  const double m = std::norm(l);
  if (!std::isfinite(m)) return make_sphere_point(0.0, 0.0, 1.0);
  const double d = 1.0 + m;
  return make_sphere_point(2.0 * l.real() / d, 2.0 * l.imag() / d, (m - 1.0) / d);
}

inline SpherePoint to_sphere(Complex lambda) { return to_sphere(ProjectivePoint{lambda}); }

/// Inverse stereographic projection.
inline ProjectivePoint from_sphere(const SpherePoint& s) {
  const double denom = 1.0 - s.z;
  if (denom <= 0.0) return ProjectivePoint::infinity();
  // For points near the north pole 1 - z loses digits; use x^2 + y^2 = (1-z)(1+z).
  const double rho2 = s.x * s.x + s.y * s.y;
  if (s.z > 0.0) {
    const double scale = (1.0 + s.z) / rho2;
    if (!std::isfinite(scale)) return ProjectivePoint::infinity();
    return ProjectivePoint{Complex{s.x * scale, s.y * scale}};
  }
  return ProjectivePoint{Complex{s.x / denom, s.y / denom}};
}

/// Height above the real circle: Y = 2 Im(lambda) / (1 + |lambda|^2).
inline double height_y(Complex lambda) { return 2.0 * lambda.imag() / (1.0 + std::norm(lambda)); }

/// Pseudocovariance tau(lambda) = (1 + lambda^2) / (1 + |lambda|^2).
inline Complex tau(Complex lambda) { return (1.0 + lambda * lambda) / (1.0 + std::norm(lambda)); }

/// q(lambda) = |tau(lambda)|^2, which equals 1 - Y^2.
inline double q_of_lambda(Complex lambda) { return std::norm(tau(lambda)); }

/// Great-circle distance from the sphere image of lambda to RP^1, i.e. arcsin |Y|.
inline double dist_to_rp1(const ProjectivePoint& p) {
  if (p.at_infinity) return 0.0;
  return std::asin(std::min(1.0, std::abs(height_y(p.value))));
}

inline double dist_to_rp1(Complex lambda) { return dist_to_rp1(ProjectivePoint{lambda}); }

/// Great-circle distance on the unit sphere.
inline double spherical_distance(const SpherePoint& a, const SpherePoint& b) {
  const double cx = a.y * b.z - a.z * b.y;
  const double cy = a.z * b.x - a.x * b.z;
  const double cz = a.x * b.y - a.y * b.x;
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const double dot = a.x * b.x + a.y * b.y + a.z * b.z;
  return std::atan2(cross, dot);
}

/// Chordal distance |a - b| / sqrt((1+|a|^2)(1+|b|^2)) on the sphere of diameter one.
/// Agrees with |a - b| near the origin and stays bounded by 1 everywhere.
inline double chordal_distance(const ProjectivePoint& a, const ProjectivePoint& b) {
  if (a.at_infinity && b.at_infinity) return 0.0;
  if (a.at_infinity) return 1.0 / std::sqrt(1.0 + std::norm(b.value));
  if (b.at_infinity) return 1.0 / std::sqrt(1.0 + std::norm(a.value));
  return std::abs(a.value - b.value) /
         std::sqrt((1.0 + std::norm(a.value)) * (1.0 + std::norm(b.value)));
}

/// Element of SU(2) written as [[u, -conj v], [v, conj u]].
struct Su2 {
  Complex u{1.0, 0.0};
  Complex v{0.0, 0.0};

  double norm_defect() const { return std::abs(std::norm(u) + std::norm(v) - 1.0); }

  /// Composition `outer` after `inner` for the pencil action (A,B) -> (uA+vB, -conj(v)A+conj(u)B).
  static Su2 compose(const Su2& outer, const Su2& inner) {
    return {outer.u * inner.u - outer.v * std::conj(inner.v),
            outer.u * inner.v + outer.v * std::conj(inner.u)};
  }
};

inline void require_unit(Complex u, Complex v) {
  if (std::abs(std::norm(u) + std::norm(v) - 1.0) > 1e-12)
    throw InvalidArgument("SU(2) parameters must satisfy |u|^2 + |v|^2 = 1");
}

/// Parameter map induced by the SU(2) action on pencils: crossings lambda of (A,B) map to
/// crossings mu = (u lambda - v) / (conj(v) lambda + conj(u)) of the transformed pencil,
/// since A' + mu B' = (u - mu conj v)(A + lambda B) with lambda = (v + mu conj u)/(u - mu conj v).
inline ProjectivePoint mobius_param(Complex u, Complex v, const ProjectivePoint& lambda) {
  require_unit(u, v);
  // Homogeneous coordinates [num : den].
  Complex num, den;
  if (lambda.at_infinity) {
    num = u;
    den = std::conj(v);
  } else {
    num = u * lambda.value - v;
    den = std::conj(v) * lambda.value + std::conj(u);
  }
  if (den == Complex{}) return ProjectivePoint::infinity();
  const Complex mu = num / den;
  if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag())) return ProjectivePoint::infinity();
  return ProjectivePoint{mu};
}

}  // namespace lcross
