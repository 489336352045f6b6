#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lcross/stats.hpp"

using namespace lcross;
constexpr double kPi = std::numbers::pi;

namespace {

Pencil sigma_pencil() {
  CMatrix a(2, 2), b(2, 2);
  a << 1, 0, 0, -1;
  b << 0, 1, 1, 0;
  return make_pencil(a, b);
}

std::vector<Complex> random_points(std::size_t n, std::uint64_t seed) {
  PhiloxStream r(seed, 0);
  std::vector<Complex> z(n);
  for (auto& x : z) x = r.complex_normal(0.5);
  return z;
}

}  // namespace

TEST(MeanAccumulator, MatchesDirectFormulae) {
  MeanAccumulator a;
  for (double x : {1.0, 2.0, 4.0, 7.0}) a.add(x);
  EXPECT_EQ(a.count(), 4u);
  EXPECT_DOUBLE_EQ(a.mean(), 3.5);
  EXPECT_DOUBLE_EQ(a.variance(), 7.0);
  EXPECT_DOUBLE_EQ(a.stderr_of_mean(), std::sqrt(7.0 / 4));
  MeanAccumulator big;
  for (int i = 0; i < 1000; ++i) big.add(1e8 + (i % 2));
  EXPECT_NEAR(big.mean(), 1e8 + 0.5, 1e-7);
  EXPECT_NEAR(big.variance(), 0.25 * 1000 / 999, 1e-6);
}

TEST(EmpiricalMeasure, WeightsExpand) {
  EmpiricalMeasure m;
  m.add(to_sphere(Complex{0, 1}), 2);
  m.add(to_sphere(Complex{0, 0}));
  EXPECT_EQ(m.total_weight, 3);
  EXPECT_EQ(m.abs_y().size(), 3u);
  EXPECT_NEAR(m.abs_y()[0], 1.0, 1e-15);
  EXPECT_EQ(m.heights()[2], -1.0);
  EXPECT_THROW(m.add(to_sphere(Complex{1, 0}), 0), InvalidArgument);
  CrossingSet c;
  c.n = 2;
  c.points.push_back({ProjectivePoint::infinity(), 2});
  c.total_count = 2;
  m.add(c);
  EXPECT_EQ(m.total_weight, 5);
  EXPECT_EQ(m.heights().back(), 1.0);
}

TEST(Ks, SamplesFromTheCdfPass) {
  PhiloxStream r(1, 0);
  const int n = 10000;
  int failures = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> s(n);
    for (auto& x : s) x = r.uniform();
    const double d = ks_statistic(s, [](double x) { return uniform_cdf(x, 0, 1); });
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    if (d >= 1.63 / std::sqrt(n)) ++failures;
  }
  // Each exceedance has probability 0.01.
  EXPECT_LE(failures, 2);
}

TEST(Ks, DegenerateSample) {
  const std::vector<double> s(100, 0.3);
  EXPECT_GE(ks_statistic(s, [](double x) { return uniform_cdf(x, 0, 1); }), 0.5);
  EXPECT_THROW(ks_statistic({0.5}, [](double x) { return x; }), InvalidArgument);
}

TEST(Ks, ArchimedesProjection) {
  PhiloxStream r(2, 0);
  std::vector<double> z;
  for (int i = 0; i < 20000; ++i) {
    double a = r.normal(), b = r.normal(), c = r.normal();
    z.push_back(c / std::sqrt(a * a + b * b + c * c));
  }
  EXPECT_LT(ks_statistic(z, [](double x) { return uniform_cdf(x, -1, 1); }), 1.63 / std::sqrt(20000.0));
}

TEST(Ks, TwoSample) {
  EXPECT_EQ(ks_two_sample({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(ks_two_sample({0, 0.1}, {5, 6}), 1.0);
  EXPECT_NEAR(ks_two_sample({1, 2, 3, 4}, {2.5}), 0.5, 1e-15);
  PhiloxStream r(3, 0);
  std::vector<double> a(5000), b(5000);
  for (auto& x : a) x = r.uniform();
  for (auto& x : b) x = r.uniform();
  EXPECT_LT(ks_two_sample(a, b), 1.63 * std::sqrt(2.0 / 5000));
}

TEST(PairLogEnergy, Examples) {
  EXPECT_NEAR(pair_log_energy({Complex{0, 0}, Complex{1, 0}}), 0.0, 1e-16);
  EXPECT_NEAR(pair_log_energy({Complex{0, 0}, Complex{2, 0}, Complex{4, 0}}), std::log(16.0) / 3, 1e-15);
  EXPECT_EQ(pair_log_energy({Complex{1, 1}, Complex{1, 1}}), -INFINITY);
  EXPECT_THROW(pair_log_energy({Complex{0, 0}}), InvalidArgument);
}

TEST(PairLogEnergy, TranslationAndScaling) {
  const auto z = random_points(40, 4);
  const double base = pair_log_energy(z);
  const Complex w{3.5, -2.0}, c{0.2, 0.7};
  auto shifted = z, scaled = z;
  for (auto& x : shifted) x += w;
  for (auto& x : scaled) x *= c;
  EXPECT_NEAR(pair_log_energy(shifted), base, 1e-10);
  EXPECT_NEAR(pair_log_energy(scaled), base + std::log(std::abs(c)), 1e-10);
}

TEST(PairLogEnergy, GinibreSpectrumNearCircularEnergy) {
  EnsembleSpec s;
  s.n = 512;
  const Pencil p = sample_pencil(s, 8, 0);
  const auto z = normalized_eigenvalues(p, Complex{0.3, -0.2});
  EXPECT_NEAR(pair_log_energy(z), -0.25, 0.02);
  EXPECT_LT(ucl_discrepancy(z, default_ucl_dictionary()), 0.02);
}

TEST(SrFunctional, Examples) {
  EXPECT_EQ(sr_functional({Complex{0, 0}, Complex{0.5, 0}, Complex{1, 0}}, 0.1), 0.0);
  const double eps = 0.1;
  EXPECT_NEAR(sr_functional({Complex{0, 0}, Complex{eps / 2, 0}}, eps), std::abs(std::log(eps / 2)), 1e-14);
  EXPECT_THROW(sr_functional({}, 1.5), InvalidArgument);
}

TEST(SmallGapCount, Examples) {
  const double r = 0.1;
  EXPECT_EQ(small_gap_count({Complex{0, 0}, Complex{0.5, 0}, Complex{1, 0}}, r, 2.0), 0.0);
  // Spacing just above r/2 keeps the outer pair beyond r: two adjacent pairs, both orders.
  EXPECT_NEAR(small_gap_count({Complex{0, 0}, Complex{0.51 * r, 0}, Complex{1.02 * r, 0}}, r, 2.0), 4.0 / 6, 1e-15);
  // At spacing exactly r/2 the outer pair sits on the closed boundary |z_i - z_j| <= r.
  EXPECT_NEAR(small_gap_count({Complex{0, 0}, Complex{0.5 * r, 0}, Complex{r, 0}}, r, 2.0), 1.0, 1e-15);
  // Points outside the disk of radius R do not count.
  EXPECT_EQ(small_gap_count({Complex{3, 0}, Complex{3.01, 0}}, r, 2.0), 0.0);
  EXPECT_THROW(small_gap_count({}, 0.1, 0.5), InvalidArgument);
}

TEST(Functionals, Monotone) {
  const auto z = random_points(200, 5);
  double prev_sr = 0, prev_gap = 0;
  for (double e : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}) {
    const double sr = sr_functional(z, e), gap = small_gap_count(z, e, 3.0);
    EXPECT_GE(sr, prev_sr);
    EXPECT_GE(gap, prev_gap);
    prev_sr = sr, prev_gap = gap;
  }
}

TEST(LtFunctional, Examples) {
  EXPECT_EQ(lt_functional({Complex{0, 0}, Complex{0.5, 0}}, 2.0), 0.0);
  const double big_r = 3.0;
  EXPECT_NEAR(lt_functional({Complex{0, 0}, Complex{2 * big_r, 0}}, big_r), std::log(2 + 2 * big_r), 1e-14);
  EXPECT_THROW(lt_functional({}, 1.0), InvalidArgument);
}

TEST(Ucl, Dictionary) {
  const auto d = default_ucl_dictionary();
  ASSERT_EQ(d.size(), 7u);
  // f = 1 has zero discrepancy for any probability measure.
  std::vector<TestFunction> one{d[0]};
  EXPECT_EQ(ucl_discrepancy(random_points(10, 6), one), 0.0);
  EXPECT_EQ(d[1].circular_integral, 0.0);
  EXPECT_EQ(d[3].circular_integral, 0.5);
  // Bump mass: 2 int_0^{1/2} exp(1 - 1/(1 - 4 r^2)) r dr, by the substitution u = 4 r^2.
  const double oracle =
      0.25 * quad::integrate([](double u) { return u < 1 ? std::exp(1 - 1 / (1 - u)) : 0.0; }, 0.0, 1.0, 1e-13);
  EXPECT_NEAR(d[6].circular_integral, oracle, 1e-10);
  // Uniform points on the disk agree.
  PhiloxStream r(7, 0);
  std::vector<Complex> z;
  for (int i = 0; i < 200000; ++i) z.push_back(std::polar(std::sqrt(r.uniform()), 2 * kPi * r.uniform()));
  EXPECT_LT(ucl_discrepancy(z, d), 0.005);
}

TEST(NormalizedEigenvalues, Scaling) {
  const auto z = normalized_eigenvalues(sigma_pencil(), Complex{0, 0}, 1.0);
  for (const auto& x : z) EXPECT_NEAR(std::abs(x), 1 / std::sqrt(2.0), 1e-15);
}

TEST(UnEstimator, GinibreIsExactlyUniform) {
  EnsembleSpec s;
  s.n = 4;
  const std::vector<Complex> lambdas{{0, 0}, {0.5, 0.5}, {0, 1}, {2, -1}, {-0.3, 0.1}};
  std::vector<Estimate> h;
  std::uint64_t block = 0;
  for (const auto& l : lambdas) {
    Estimate e = un_estimator(s, l, 4000, 55, block++ * 4000, 4);
    e.mean -= 0.5 * std::log1p(std::norm(l));
    h.push_back(e);
  }
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = i + 1; j < h.size(); ++j)
      EXPECT_LT(std::abs(h[i].mean - h[j].mean), 3 * std::hypot(h[i].stderr_, h[j].stderr_)) << i << ' ' << j;
}

TEST(UnEstimator, StderrShrinksLikeInverseRoot) {
  EnsembleSpec s;
  s.kind = EnsembleKind::Goe;
  s.n = 3;
  const auto a = un_estimator(s, Complex{0.2, 0.4}, 1000, 3, 0, 4);
  const auto b = un_estimator(s, Complex{0.2, 0.4}, 16000, 3, 1000, 4);
  EXPECT_NEAR(a.stderr_ / b.stderr_, 4.0, 0.6);
  EXPECT_EQ(a.samples + a.discarded, 1000u);
  EXPECT_THROW(un_estimator(s, Complex{0, 0}, 1, 3), InvalidArgument);
}

TEST(UnEstimator, ThreadCountDoesNotChangeResult) {
  EnsembleSpec s;
  s.n = 5;
  const auto a = un_estimator(s, Complex{0.1, 0.9}, 300, 9, 0, 1);
  const auto b = un_estimator(s, Complex{0.1, 0.9}, 300, 9, 0, 7);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Representatives, MatchRequestedQ) {
  for (double q : {0.0, 0.2, 0.5, 0.8, 1.0}) EXPECT_NEAR(q_of_lambda(axis_representative(q)), q, 1e-14) << q;
  for (double q : {0.2, 0.5, 0.8}) {
    const Complex l = generic_representative(q);
    EXPECT_NEAR(q_of_lambda(l), q, 1e-12);
    EXPECT_NEAR(std::arg(l), kGenericRayAngle, 1e-15);
    EXPECT_LE(std::abs(l), 1.0);
  }
  EXPECT_THROW(generic_representative(0.1), InvalidArgument);
  EXPECT_THROW(axis_representative(1.5), InvalidArgument);
}

TEST(HnProfile, GinibreIsFlatAndMatched) {
  EnsembleSpec s;
  s.n = 3;
  const auto rows = hn_profile(s, {0.2, 0.5, 0.8}, 3000, 21, 4);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_LT(r.discrepancy, 3 * r.combined_stderr) << r.q;
    EXPECT_LT(std::abs(r.h_axis.mean - rows[0].h_axis.mean), 3 * std::hypot(r.h_axis.stderr_, rows[0].h_axis.stderr_));
  }
}

TEST(NearReal, Counts) {
  const CrossingSet c = solve_crossings(sigma_pencil());
  EXPECT_EQ(near_real_count(c, 0.1), 0);
  EXPECT_EQ(near_real_count(c, kPi / 2 + 1e-9), 2);
  EXPECT_THROW(near_real_count(c, 0.0), InvalidArgument);
  EnsembleSpec s;
  s.kind = EnsembleKind::RealGinibre;
  s.n = 5;
  const CrossingSet g = solve_crossings(sample_pencil(s, 4, 0));
  long long prev = 0;
  for (double e : {0.01, 0.05, 0.2, 0.7, 1.2, kPi / 2 + 1e-9}) {
    const long long k = near_real_count(g, e);
    EXPECT_GE(k, prev);
    prev = k;
  }
  EXPECT_EQ(prev, g.total_count);
}

TEST(ExactlyReal, Counts) {
  EnsembleSpec goe;
  goe.kind = EnsembleKind::Goe;
  goe.n = 2;
  EnsembleSpec gin;
  gin.n = 4;
  for (std::uint64_t t = 0; t < 100; ++t) {
    EXPECT_EQ(exactly_real_count(solve_crossings(sample_pencil(goe, 1, t))), 0);
    if (t < 20) {
      EXPECT_EQ(exactly_real_count(solve_crossings(sample_pencil(gin, 1, t))), 0);
    }
  }
  CrossingSet c;
  c.n = 2;
  c.points.push_back({ProjectivePoint{Complex{0.5, 0}}, 1});
  c.points.push_back({ProjectivePoint{Complex{2, 1e-12}}, 1});
  c.points.push_back({ProjectivePoint{Complex{2, -1e-12}}, 1});
  c.total_count = 3;
  EXPECT_EQ(exactly_real_count(c), 1);
}

TEST(Histogram, Fractions) {
  const auto h = histogram_fractions({0.05, 0.15, 0.15, 0.95, 1.0, -0.1}, 0, 1, 10, 6);
  ASSERT_EQ(h.size(), 10u);
  EXPECT_NEAR(h[0], 1.0 / 6, 1e-15);
  EXPECT_NEAR(h[1], 2.0 / 6, 1e-15);
  EXPECT_NEAR(h[9], 1.0 / 6, 1e-15);
}
