#pragma once

// Empirical measures and the functionals measured on them: goodness of fit, pair
// log-energy, small-repulsion / log-tail / circular-law discrepancies, Monte Carlo
// estimators of the normalized log-discriminant, and counts near RP^1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lcross/crossings.hpp"
#include "lcross/ensembles.hpp"
#include "lcross/error.hpp"
#include "lcross/geometry.hpp"
#include "lcross/laws.hpp"
#include "lcross/parallel.hpp"
#include "lcross/pencil_core.hpp"

namespace lcross {

// ---------------------------------------------------------------------------
// Accumulation.

/// Welford running mean and variance (stable for large offsets).
class MeanAccumulator {
 public:
  void add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ < 2 ? 0.0 : std::max(0.0, m2_ / (static_cast<double>(count_) - 1.0)); }
  double stderr_of_mean() const { return count_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_)); }

 private:
  double mean_ = 0.0, m2_ = 0.0;
  std::size_t count_ = 0;
};

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t discarded = 0;
};

// ---------------------------------------------------------------------------
// Empirical measures on CP^1.

struct EmpiricalMeasure {
  std::vector<SpherePoint> samples;
  std::vector<int> weights;
  long long total_weight = 0;

  void add(const SpherePoint& p, int weight = 1) {
    if (weight < 1) throw InvalidArgument("empirical measure weights must be >= 1");
    samples.push_back(p);
    weights.push_back(weight);
    total_weight += weight;
  }

  void add(const CrossingSet& c) {
    for (const auto& p : c.points) add(to_sphere(p.lambda), p.multiplicity);
  }

  /// Coordinates repeated by weight.
  template <class Fn>
  std::vector<double> coordinate(Fn&& fn) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total_weight));
    for (std::size_t i = 0; i < samples.size(); ++i)
      for (int w = 0; w < weights[i]; ++w) out.push_back(fn(samples[i]));
    return out;
  }

  std::vector<double> heights() const { return coordinate([](const SpherePoint& s) { return s.zc; }); }
  std::vector<double> azimuth_fractions() const {
    return coordinate([](const SpherePoint& s) { return s.phi / (2.0 * std::numbers::pi); });
  }
  std::vector<double> abs_y() const { return coordinate([](const SpherePoint& s) { return std::abs(s.y); }); }
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov.

inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 2) throw InvalidArgument("ks_statistic needs at least two samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double uniform_cdf(double x, double lo, double hi) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); }

// ---------------------------------------------------------------------------
// Eigenvalue functionals.

/// zeta_k = xi_k(lambda) / (sigma sqrt(n (1 + |lambda|^2))).
inline std::vector<Complex> normalized_eigenvalues(const Pencil& p, Complex lambda, double sigma = 1.0) {
  auto eigs = eigenvalues_only(p, lambda);
  const double norm = sigma * std::sqrt(p.n() * (1.0 + std::norm(lambda)));
  for (auto& e : eigs) e /= norm;
  return eigs;
}

inline double pair_count(std::size_t n) { return static_cast<double>(n) * static_cast<double>(n - 1); }

/// (2 / (n(n-1))) sum_{i<j} log |z_i - z_j|; -infinity for coincident points.
inline double pair_log_energy(const std::vector<Complex>& z) {
  if (z.size() < 2) throw InvalidArgument("pair_log_energy needs at least two points");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      const double d = std::abs(z[i] - z[j]);
      if (d == 0.0) return -std::numeric_limits<double>::infinity();
      s += std::log(d);
    }
  return 2.0 * s / pair_count(z.size());
}

/// (1/(n(n-1))) sum_{i != j} 1{|z_i - z_j| <= eps} |log |z_i - z_j||.
inline double sr_functional(const std::vector<Complex>& z, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("sr_functional needs 0 < eps < 1");
  if (z.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      const double d = std::abs(z[i] - z[j]);
      if (d <= eps) s += 2.0 * std::abs(std::log(d));
    }
  return s / pair_count(z.size());
}

/// (1/(n(n-1))) #{i != j : |z_i|, |z_j| <= R, |z_i - z_j| <= r}.
inline double small_gap_count(const std::vector<Complex>& z, double r, double big_r) {
  if (!(r > 0.0 && r < 1.0 && big_r > 1.0)) throw InvalidArgument("small_gap_count needs 0 < r < 1 < R");
  if (z.size() < 2) return 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(z[i]) > big_r) continue;
    for (std::size_t j = i + 1; j < z.size(); ++j)
      if (std::abs(z[j]) <= big_r && std::abs(z[i] - z[j]) <= r) c += 2.0;
  }
  return c / pair_count(z.size());
}

/// (1/(n(n-1))) sum_{i != j, max(|z_i|,|z_j|) > R} log(2 + |z_i| + |z_j|).
inline double lt_functional(const std::vector<Complex>& z, double big_r) {
  if (!(big_r > 1.0)) throw InvalidArgument("lt_functional needs R > 1");
  if (z.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      const double a = std::abs(z[i]), b = std::abs(z[j]);
      if (std::max(a, b) > big_r) s += 2.0 * std::log(2.0 + a + b);
    }
  return s / pair_count(z.size());
}

struct TestFunction {
  std::string name;
  std::function<double(Complex)> f;
  double circular_integral = 0.0;
};

/// Smooth bump supported in |z| < radius.
inline double bump(Complex z, double radius = 0.5) {
  const double t = std::norm(z) / (radius * radius);
  return t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t)) : 0.0;
}

/// The fixed dictionary standing in for "all bounded continuous f".
inline std::vector<TestFunction> default_ucl_dictionary() {
  std::vector<TestFunction> d;
  d.push_back({"one", [](Complex) { return 1.0; }, 1.0});
  d.push_back({"re", [](Complex z) { return z.real(); }, 0.0});
  d.push_back({"im", [](Complex z) { return z.imag(); }, 0.0});
  d.push_back({"abs2", [](Complex z) { return std::norm(z); }, 0.5});
  d.push_back({"re_z2", [](Complex z) { return (z * z).real(); }, 0.0});
  d.push_back({"im_z2", [](Complex z) { return (z * z).imag(); }, 0.0});
  // Radial integral 2 int_0^{1/2} bump(r) r dr against the density 1/pi.
  const double bump_mass = 2.0 * quad::integrate([](double r) { return bump(Complex{r, 0.0}) * r; }, 0.0, 0.5, 1e-12);
  d.push_back({"bump", [](Complex z) { return bump(z); }, bump_mass});
  return d;
}

/// max_f | int f dL - int f d sigma_circ | with L the empirical measure of z.
inline double ucl_discrepancy(const std::vector<Complex>& z, const std::vector<TestFunction>& fns) {
  if (z.empty()) throw InvalidArgument("ucl_discrepancy needs points");
  double worst = 0.0;
  for (const auto& t : fns) {
    double s = 0.0;
    for (const auto& p : z) s += t.f(p);
    worst = std::max(worst, std::abs(s / static_cast<double>(z.size()) - t.circular_integral));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Normalized log-discriminant estimators.

/// Mean and standard error of log|Delta_n(lambda)| / (n(n-1)) over trials
/// [first_trial, first_trial + trials) of stream `master_seed`. Non-finite samples are
/// discarded and counted; more than 1% discards is an error.
inline Estimate un_estimator(const EnsembleSpec& spec, Complex lambda, std::size_t trials,
                             std::uint64_t master_seed, std::uint64_t first_trial = 0, unsigned threads = 1) {
  if (trials < 2) throw InvalidArgument("un_estimator needs at least two trials");
  if (spec.n < 2) throw InvalidArgument("un_estimator needs n >= 2");
  std::vector<double> values(trials);
  std::vector<char> ok(trials, 0);
  const double pairs = pair_count(static_cast<std::size_t>(spec.n));
  parallel_for(trials, threads, [&](std::size_t t) {
    const Pencil p = sample_pencil(spec, master_seed, first_trial + t);
    const LogDisc ld = log_discriminant(p, lambda);
    if (ld.finite) {
      values[t] = ld.log_abs / pairs;
      ok[t] = 1;
    }
  });
  MeanAccumulator acc;
  std::size_t discarded = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (ok[t])
      acc.add(values[t]);
    else
      ++discarded;
  }
  if (static_cast<double>(discarded) > 0.01 * static_cast<double>(trials))
    throw NumericalError("more than 1% of log-discriminant samples were degenerate");
  return {acc.mean(), acc.stderr_of_mean(), acc.count(), discarded};
}

/// Angle of the generic ray used for the second matched-q representative.
inline constexpr double kGenericRayAngle = 3.0 * std::numbers::pi / 8.0;

/// lambda(q) = i t on the imaginary axis, t in [0, 1], with q(i t) = q.
inline Complex axis_representative(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in [0,1]");
  const double s = std::sqrt(q);
  return {0.0, std::sqrt((1.0 - s) / (1.0 + s))};
}

/// lambda'(q) = r e^{i 3pi/8}, r in (0, 1], with q(lambda') = q; r by bisection.
/// Along this ray q decreases from 1 to cos^2(3pi/8), which bounds the reachable range.
inline Complex generic_representative(double q) {
  const double q_min = std::cos(kGenericRayAngle) * std::cos(kGenericRayAngle);
  if (!(q >= q_min && q <= 1.0))
    throw InvalidArgument("q below cos^2(3pi/8) is not reachable on the generic ray");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (q_of_lambda(std::polar(mid, kGenericRayAngle)) > q)
      lo = mid;
    else
      hi = mid;
  }
  return std::polar(0.5 * (lo + hi), kGenericRayAngle);
}

struct HnRow {
  double q = 0.0;
  Complex lambda_axis, lambda_generic;
  Estimate h_axis, h_generic;  // U_n(lambda) - 1/2 log(1 + |lambda|^2)
  double discrepancy = 0.0;
  double combined_stderr = 0.0;
};

/// H_n(q) at two parameters with the same q, from independent trial blocks.
inline std::vector<HnRow> hn_profile(const EnsembleSpec& spec, const std::vector<double>& q_grid, std::size_t trials,
                                     std::uint64_t master_seed, unsigned threads = 1) {
  std::vector<HnRow> rows;
  std::uint64_t block = 0;
  for (double q : q_grid) {
    HnRow row;
    row.q = q;
    row.lambda_axis = axis_representative(q);
    row.lambda_generic = generic_representative(q);
    row.h_axis = un_estimator(spec, row.lambda_axis, trials, master_seed, block++ * trials, threads);
    row.h_generic = un_estimator(spec, row.lambda_generic, trials, master_seed, block++ * trials, threads);
    row.h_axis.mean -= 0.5 * std::log1p(std::norm(row.lambda_axis));
    row.h_generic.mean -= 0.5 * std::log1p(std::norm(row.lambda_generic));
    row.discrepancy = std::abs(row.h_axis.mean - row.h_generic.mean);
    row.combined_stderr = std::hypot(row.h_axis.stderr_, row.h_generic.stderr_);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Counts near RP^1.

/// N_n(eps): crossings within spherical distance eps of RP^1, with multiplicity.
inline long long near_real_count(const CrossingSet& c, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("near_real_count needs eps > 0");
  long long count = 0;
  for (const auto& p : c.points)
    if (dist_to_rp1(p.lambda) < eps) count += p.multiplicity;
  return count;
}

/// Crossings with |Im lambda| < tol (1 + |lambda|^2) that have no distinct partner near
/// their complex conjugate, i.e. numerically real crossings rather than near-real pairs.
inline long long exactly_real_count(const CrossingSet& c, double tol = 1e-8) {
  long long count = 0;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const auto& p = c.points[i];
    if (p.lambda.at_infinity) continue;
    const Complex l = p.lambda.value;
    const double scale = tol * (1.0 + std::norm(l));
    if (!(std::abs(l.imag()) < scale)) continue;
    bool paired = false;
    for (std::size_t j = 0; j < c.points.size() && !paired; ++j) {
      if (j == i || c.points[j].lambda.at_infinity) continue;
      paired = std::abs(c.points[j].lambda.value - std::conj(l)) < scale;
    }
    if (!paired) count += p.multiplicity;
  }
  return count;
}

/// Fraction of values in each of `bins` equal bins on [lo, hi).
inline std::vector<double> histogram_fractions(const std::vector<double>& values, double lo, double hi, int bins,
                                               double normalizer) {
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    if (v < lo || v >= hi) continue;
    auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    if (k >= h.size()) k = h.size() - 1;
    h[k] += 1.0;
  }
  for (auto& x : h) x /= normalizer;
  return h;
}

}  // namespace lcross
