#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "lcross/ensembles.hpp"
#include "lcross/geometry.hpp"

using namespace lcross;

namespace {

struct Moments {
  double mean_re = 0, mean_im = 0, abs2 = 0, abs2_se = 0;
};

/// Monte Carlo first and second moments of the scalar fn(matrix) over `draws` draws.
Moments moments(const std::function<CMatrix(PhiloxStream&)>& gen, const std::function<Complex(const CMatrix&)>& fn,
                int draws, std::uint64_t seed) {
  PhiloxStream rng(seed, 0);
  double sr = 0, si = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < draws; ++i) {
    const Complex v = fn(gen(rng));
    sr += v.real();
    si += v.imag();
    s2 += std::norm(v);
    s4 += std::norm(v) * std::norm(v);
  }
  Moments m;
  m.mean_re = sr / draws;
  m.mean_im = si / draws;
  m.abs2 = s2 / draws;
  m.abs2_se = std::sqrt((s4 / draws - m.abs2 * m.abs2) / draws);
  return m;
}

}  // namespace

TEST(ComplexGinibre, OffDiagonalSecondMoment) {
  const auto m = moments([](PhiloxStream& r) { return sample_complex_ginibre(2, 0.5, r); },
                         [](const CMatrix& a) { return a(0, 1); }, 100000, 11);
  EXPECT_NEAR(m.abs2, 1.0, 0.01);
  EXPECT_NEAR(m.abs2, 1.0, 5 * m.abs2_se);
  EXPECT_NEAR(m.mean_re, 0.0, 5 * std::sqrt(0.5 / 1e5));
}

TEST(ComplexGinibre, DiagonalVarianceFollowsParameter) {
  const auto m = moments([](PhiloxStream& r) { return sample_complex_ginibre(3, 2.0, r); },
                         [](const CMatrix& a) { return a(1, 1); }, 100000, 12);
  EXPECT_NEAR(m.abs2, 4.0, 5 * m.abs2_se);
}

TEST(ComplexGinibre, ZeroDiagonalVariance) {
  PhiloxStream r(1, 1);
  const CMatrix a = sample_complex_ginibre(5, 0.0, r);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a(i, i), Complex(0.0, 0.0));
}

TEST(ComplexGinibre, RejectsNegativeVariance) {
  PhiloxStream r(1, 1);
  EXPECT_THROW(sample_complex_ginibre(3, -1.0, r), InvalidArgument);
  EXPECT_THROW(sample_complex_ginibre(0, 0.5, r), InvalidArgument);
}

TEST(ComplexGinibre, QuotientOfScalarsIsUniformOnSphere) {
  // n = 1: Z-coordinate of a/b is |q|^2-based and uniform; |q|^2/(1+|q|^2) ~ U[0,1].
  PhiloxStream r(5, 0);
  const int draws = 50000;
  std::vector<double> u;
  for (int i = 0; i < draws; ++i) {
    const Complex a = sample_complex_ginibre(1, 0.5, r)(0, 0);
    const Complex b = sample_complex_ginibre(1, 0.5, r)(0, 0);
    const double q2 = std::norm(a / b);
    u.push_back(q2 / (1 + q2));
  }
  std::sort(u.begin(), u.end());
  double d = 0;
  for (int i = 0; i < draws; ++i)
    d = std::max({d, (i + 1.0) / draws - u[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(i)] - double(i) / draws});
  EXPECT_LT(d, 1.63 / std::sqrt(draws));
}

TEST(Goe, SymmetricWithStatedVariances) {
  PhiloxStream r(2, 0);
  const CMatrix a = sample_goe(4, r);
  EXPECT_TRUE(a == a.transpose());
  EXPECT_TRUE(a.imag().isZero(0.0));
  const auto d = moments([](PhiloxStream& s) { return sample_goe(3, s); }, [](const CMatrix& m) { return m(0, 0); },
                         100000, 21);
  EXPECT_NEAR(d.abs2, 2.0, 0.02 * 2.0);
  const auto o = moments([](PhiloxStream& s) { return sample_goe(3, s); }, [](const CMatrix& m) { return m(0, 2); },
                         100000, 22);
  EXPECT_NEAR(o.abs2, 1.0, 5 * o.abs2_se);
}

TEST(Gue, HermitianWithStatedVariances) {
  PhiloxStream r(3, 0);
  const CMatrix h = sample_gue(5, r);
  EXPECT_TRUE(h == h.adjoint());
  const auto o = moments([](PhiloxStream& s) { return sample_gue(4, s); }, [](const CMatrix& m) { return m(0, 1); },
                         100000, 31);
  EXPECT_NEAR(o.abs2, 0.25, 0.02 * 0.25);
  const auto d = moments([](PhiloxStream& s) { return sample_gue(4, s); }, [](const CMatrix& m) { return m(2, 2); },
                         100000, 32);
  EXPECT_NEAR(d.abs2, 0.25, 5 * d.abs2_se);
  EXPECT_NEAR(d.mean_im, 0.0, 0.0);
}

TEST(Wigner, RademacherOffDiagonalModulus) {
  PhiloxStream r(4, 0);
  const CMatrix h = sample_wigner(8, EntryLaw::Gaussian, EntryLaw::Rademacher, r);
  EXPECT_TRUE(h == h.adjoint());
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (i != j) EXPECT_NEAR(std::abs(h(i, j)), 1.0 / std::sqrt(8.0), 1e-15);
}

TEST(Wigner, GaussianMatchesGueMoments) {
  const auto w = moments([](PhiloxStream& s) { return sample_wigner(4, EntryLaw::Gaussian, EntryLaw::Gaussian, s); },
                         [](const CMatrix& m) { return m(1, 3); }, 100000, 41);
  const auto g = moments([](PhiloxStream& s) { return sample_gue(4, s); }, [](const CMatrix& m) { return m(1, 3); },
                         100000, 42);
  EXPECT_NEAR(w.abs2, g.abs2, 5 * std::hypot(w.abs2_se, g.abs2_se));
  const auto wd = moments([](PhiloxStream& s) { return sample_wigner(4, EntryLaw::Gaussian, EntryLaw::Gaussian, s); },
                          [](const CMatrix& m) { return m(0, 0); }, 100000, 43);
  const auto gd = moments([](PhiloxStream& s) { return sample_gue(4, s); }, [](const CMatrix& m) { return m(0, 0); },
                          100000, 44);
  EXPECT_NEAR(wd.abs2, gd.abs2, 5 * std::hypot(wd.abs2_se, gd.abs2_se));
}

TEST(Wigner, UniformOffDiagonalHasMeanZeroAndUnitScaledVariance) {
  const int draws = 100000;
  const auto m = moments([](PhiloxStream& s) { return sample_wigner(6, EntryLaw::Gaussian, EntryLaw::Uniform, s); },
                         [](const CMatrix& a) { return a(0, 1); }, draws, 45);
  const double se = std::sqrt(m.abs2 / 2 / draws);
  EXPECT_NEAR(m.mean_re, 0.0, 3 * se);
  EXPECT_NEAR(m.mean_im, 0.0, 3 * se);
  EXPECT_NEAR(m.abs2, 1.0 / 6, 5 * m.abs2_se);
}

TEST(EntryLaws, EveryLawHasDeclaredMoments) {
  for (EntryLaw law : {EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::Uniform}) {
    PhiloxStream r(6, static_cast<std::uint64_t>(law));
    const int n = 100000;
    double s = 0, s2 = 0, cs = 0, c2 = 0, c4 = 0, r4 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = draw_real(law, r);
      s += x, s2 += x * x, r4 += x * x * x * x;
      const Complex z = draw_complex(law, r);
      cs += z.real();
      c2 += std::norm(z);
      c4 += std::norm(z) * std::norm(z);
    }
    EXPECT_NEAR(s / n, 0.0, 5 / std::sqrt(n)) << to_string(law);
    EXPECT_NEAR(s2 / n, 1.0, 5 * std::sqrt((r4 / n - 1.0) / n) + 1e-12) << to_string(law);
    EXPECT_NEAR(cs / n, 0.0, 5 / std::sqrt(n)) << to_string(law);
    EXPECT_NEAR(c2 / n, 1.0, 5 * std::sqrt(std::max(c4 / n - 1.0, 0.0) / n) + 1e-12) << to_string(law);
  }
}

TEST(RealIid, RademacherEntriesAreSigns) {
  PhiloxStream r(7, 0);
  const CMatrix a = sample_real_iid(6, EntryLaw::Rademacher, r);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(std::abs(a(i, j)), 1.0);
}

TEST(RealIid, GaussianVariance) {
  const auto m = moments([](PhiloxStream& s) { return sample_real_iid(8, EntryLaw::Gaussian, s); },
                         [](const CMatrix& a) { return a(0, 0); }, 100000, 71);
  EXPECT_NEAR(m.abs2, 1.0, 0.02);
}

TEST(Subspace, MembershipIsExact) {
  PhiloxStream r(8, 0);
  const CMatrix d = sample_subspace(SubspaceKind::Diagonal, 5, r);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) EXPECT_EQ(d(i, j), Complex(0, 0));
  const CMatrix t = sample_subspace(SubspaceKind::Toeplitz, 4, r);
  for (int i = 0; i + 1 < 4; ++i)
    for (int j = 0; j + 1 < 4; ++j) EXPECT_EQ(t(i, j), t(i + 1, j + 1));
  const CMatrix s = sample_subspace(SubspaceKind::ComplexSymmetric, 5, r);
  EXPECT_TRUE(s == s.transpose());
  const CMatrix b = sample_subspace(SubspaceKind::Band, 6, r, 1);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (std::abs(i - j) > 1) EXPECT_EQ(b(i, j), Complex(0, 0));
  const CMatrix bt = sample_subspace(SubspaceKind::BandToeplitz, 6, r, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (std::abs(i - j) > 2) EXPECT_EQ(bt(i, j), Complex(0, 0));
      if (i + 1 < 6 && j + 1 < 6) EXPECT_EQ(bt(i, j), bt(i + 1, j + 1));
    }
}

TEST(Subspace, RejectsInvalidBand) {
  PhiloxStream r(8, 1);
  EXPECT_THROW(sample_subspace(SubspaceKind::Band, 4, r, 4), InvalidArgument);
  EXPECT_THROW(sample_subspace(SubspaceKind::BandToeplitz, 4, r, -1), InvalidArgument);
}

TEST(Subspace, ToeplitzFreeCoordinateVariance) {
  const auto m = moments([](PhiloxStream& s) { return sample_subspace(SubspaceKind::Toeplitz, 4, s); },
                         [](const CMatrix& a) { return a(1, 3); }, 100000, 81);
  EXPECT_NEAR(m.abs2, 1.0, 5 * m.abs2_se);
}

TEST(Pencil, DeterministicAcrossCalls) {
  EnsembleSpec s;
  s.kind = EnsembleKind::Gue;
  s.n = 5;
  const Pencil p = sample_pencil(s, 99, 3), q = sample_pencil(s, 99, 3), o = sample_pencil(s, 99, 4);
  EXPECT_TRUE(p.a == q.a);
  EXPECT_TRUE(p.b == q.b);
  EXPECT_FALSE(p.a == o.a);
  EXPECT_EQ(p.seed_tag, q.seed_tag);
  EXPECT_TRUE(p.b == p.b.adjoint());
}

TEST(Pencil, ScaleIsApplied) {
  EnsembleSpec s;
  s.n = 3;
  const Pencil p = sample_pencil(s, 5, 0);
  s.scale = 2.5;
  const Pencil q = sample_pencil(s, 5, 0);
  EXPECT_TRUE(q.a.isApprox(2.5 * p.a, 1e-15));
}

TEST(Pencil, MakePencilChecksShapes) {
  EXPECT_THROW(make_pencil(CMatrix::Zero(2, 2), CMatrix::Zero(3, 3)), InvalidArgument);
  EXPECT_THROW(make_pencil(CMatrix::Zero(2, 3), CMatrix::Zero(2, 3)), InvalidArgument);
  EXPECT_EQ(make_pencil(CMatrix::Zero(4, 4), CMatrix::Identity(4, 4)).n(), 4);
}

TEST(Pencil, GoePseudocovariance) {
  // E[(a + lambda b)^2 / (1 + |lambda|^2)] = tau(lambda) for unit-variance off-diagonal entries.
  EnsembleSpec s;
  s.kind = EnsembleKind::Goe;
  s.n = 3;
  const Complex lambda{0.4, 0.9};
  const int draws = 100000;
  Complex sum{0, 0};
  double s2 = 0;
  for (int t = 0; t < draws; ++t) {
    const Pencil p = sample_pencil(s, 17, static_cast<std::uint64_t>(t));
    const Complex c = (p.a(0, 1) + lambda * p.b(0, 1)) / std::sqrt(1 + std::norm(lambda));
    sum += c * c;
    s2 += std::norm(c * c);
  }
  const Complex mean = sum / double(draws);
  const double se = std::sqrt(s2 / draws / draws);
  EXPECT_LT(std::abs(mean - tau(lambda)), 5 * se);
}

TEST(Names, RoundTrip) {
  for (auto k : {EnsembleKind::ComplexGinibre, EnsembleKind::RealGinibre, EnsembleKind::Goe, EnsembleKind::Gue,
                 EnsembleKind::Wigner, EnsembleKind::Subspace})
    EXPECT_EQ(parse_ensemble_kind(to_string(k)), k);
  for (auto l : {EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::Uniform}) EXPECT_EQ(parse_entry_law(to_string(l)), l);
  for (auto s : {SubspaceKind::ComplexSymmetric, SubspaceKind::Toeplitz, SubspaceKind::Band, SubspaceKind::BandToeplitz,
                 SubspaceKind::Diagonal})
    EXPECT_EQ(parse_subspace_kind(to_string(s)), s);
  EXPECT_THROW(parse_entry_law("cauchy"), InvalidArgument);
  EXPECT_THROW(parse_ensemble_kind("wishart"), InvalidArgument);
}
