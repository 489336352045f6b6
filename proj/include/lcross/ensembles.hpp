#pragma once

// Random matrix ensembles and structured subspaces used to build pencils A + lambda B.
//
// Variance conventions:
//   complex-ginibre  off-diagonal N(0,1/2) + i N(0,1/2); diagonal N(0,d) + i N(0,d)
//                    with d = diag_variance (d = 1/2 is the plain Ginibre ensemble).
//   real-ginibre     i.i.d. real entries of unit variance from the chosen entry law.
//   goe              symmetric, off-diagonal N(0,1), diagonal sqrt(2) N(0,1).
//   gue              density proportional to exp(-(n/2) tr H^2): diagonal variance 1/n,
//                    off-diagonal E|h|^2 = 1/n.
//   wigner           Hermitian, diagonal law mu, upper off-diagonal law nu, scaled by 1/sqrt(n).
//   subspace         complex Ginibre variances restricted to a linear subspace.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "lcross/error.hpp"
#include "lcross/rng.hpp"

namespace lcross {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

enum class EnsembleKind { ComplexGinibre, RealGinibre, Goe, Gue, Wigner, Subspace };
enum class EntryLaw { Gaussian, Rademacher, Uniform };
enum class SubspaceKind { ComplexSymmetric, Toeplitz, Band, BandToeplitz, Diagonal };

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::ComplexGinibre;
  int n = 2;
  double diag_variance = 0.5;
  double scale = 1.0;
  EntryLaw mu = EntryLaw::Gaussian;         // wigner diagonal law
  EntryLaw nu = EntryLaw::Gaussian;         // wigner off-diagonal law
  EntryLaw entry_law = EntryLaw::Gaussian;  // real-ginibre entry law
  SubspaceKind subspace = SubspaceKind::ComplexSymmetric;
  int band = 0;

  bool is_real() const {
    return kind == EnsembleKind::RealGinibre || kind == EnsembleKind::Goe;
  }
  bool is_hermitian() const {
    return kind == EnsembleKind::Gue || kind == EnsembleKind::Wigner;
  }
};

struct Pencil {
  CMatrix a;
  CMatrix b;
  EnsembleSpec spec;
  std::uint64_t seed_tag = 0;

  int n() const { return static_cast<int>(a.rows()); }
};

// ---------------------------------------------------------------------------
// Names used by the config format.

inline std::string_view to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::ComplexGinibre: return "complex-ginibre";
    case EnsembleKind::RealGinibre: return "real-ginibre";
    case EnsembleKind::Goe: return "goe";
    case EnsembleKind::Gue: return "gue";
    case EnsembleKind::Wigner: return "wigner";
    case EnsembleKind::Subspace: return "subspace";
  }
  return "?";
}

inline std::string_view to_string(EntryLaw l) {
  switch (l) {
    case EntryLaw::Gaussian: return "gaussian";
    case EntryLaw::Rademacher: return "rademacher";
    case EntryLaw::Uniform: return "uniform";
  }
  return "?";
}

inline std::string_view to_string(SubspaceKind s) {
  switch (s) {
    case SubspaceKind::ComplexSymmetric: return "complex-symmetric";
    case SubspaceKind::Toeplitz: return "toeplitz";
    case SubspaceKind::Band: return "band";
    case SubspaceKind::BandToeplitz: return "band-toeplitz";
    case SubspaceKind::Diagonal: return "diagonal";
  }
  return "?";
}

inline EnsembleKind parse_ensemble_kind(std::string_view s) {
  for (auto k : {EnsembleKind::ComplexGinibre, EnsembleKind::RealGinibre, EnsembleKind::Goe,
                 EnsembleKind::Gue, EnsembleKind::Wigner, EnsembleKind::Subspace})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown ensemble kind '" + std::string(s) + "'");
}

inline EntryLaw parse_entry_law(std::string_view s) {
  for (auto l : {EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::Uniform})
    if (to_string(l) == s) return l;
  throw InvalidArgument("unknown law id '" + std::string(s) + "'");
}

inline SubspaceKind parse_subspace_kind(std::string_view s) {
  for (auto k : {SubspaceKind::ComplexSymmetric, SubspaceKind::Toeplitz, SubspaceKind::Band,
                 SubspaceKind::BandToeplitz, SubspaceKind::Diagonal})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown subspace kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Scalar entry laws. All have mean zero; real laws have unit variance and
// complex laws have unit second absolute moment.

inline double draw_real(EntryLaw law, PhiloxStream& rng) {
  switch (law) {
    case EntryLaw::Gaussian: return rng.normal();
    case EntryLaw::Rademacher: return rng.sign();
    case EntryLaw::Uniform: return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
  }
  throw InvalidArgument("unknown law id");
}

inline Complex draw_complex(EntryLaw law, PhiloxStream& rng) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  switch (law) {
    case EntryLaw::Gaussian: return rng.complex_normal(0.5);
    case EntryLaw::Rademacher: {
      const double re = rng.sign();
      const double im = rng.sign();
      return {re * kInvSqrt2, im * kInvSqrt2};
    }
    case EntryLaw::Uniform: {
      const double re = draw_real(EntryLaw::Uniform, rng);
      const double im = draw_real(EntryLaw::Uniform, rng);
      return {re * kInvSqrt2, im * kInvSqrt2};
    }
  }
  throw InvalidArgument("unknown law id");
}

// ---------------------------------------------------------------------------
// Generators.

inline void require_size(int n) {
  if (n < 1) throw InvalidArgument("matrix size must be positive");
}

inline CMatrix sample_complex_ginibre(int n, double diag_variance, PhiloxStream& rng) {
  require_size(n);
  if (!(diag_variance >= 0.0)) throw InvalidArgument("diag_variance must be nonnegative");
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = rng.complex_normal(i == j ? diag_variance : 0.5);
  return m;
}

inline CMatrix sample_goe(int n, PhiloxStream& rng) {
  require_size(n);
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = std::sqrt(2.0) * rng.normal();
    for (int j = i + 1; j < n; ++j) {
      const double v = rng.normal();
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

inline CMatrix sample_gue(int n, PhiloxStream& rng) {
  require_size(n);
  const double inv_n = 1.0 / n;
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = std::sqrt(inv_n) * rng.normal();
    for (int j = i + 1; j < n; ++j) {
      const Complex v = rng.complex_normal(0.5 * inv_n);
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  }
  return m;
}

inline CMatrix sample_wigner(int n, EntryLaw mu, EntryLaw nu, PhiloxStream& rng) {
  require_size(n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = s * draw_real(mu, rng);
    for (int j = i + 1; j < n; ++j) {
      const Complex v = s * draw_complex(nu, rng);
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  }
  return m;
}

inline CMatrix sample_real_iid(int n, EntryLaw law, PhiloxStream& rng) {
  require_size(n);
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = draw_real(law, rng);
  return m;
}

inline CMatrix sample_subspace(SubspaceKind kind, int n, PhiloxStream& rng, int band = 0,
                               double diag_variance = 0.5) {
  require_size(n);
  if ((kind == SubspaceKind::Band || kind == SubspaceKind::BandToeplitz) &&
      (band < 0 || band > n - 1))
    throw InvalidArgument("band width must satisfy 0 <= k <= n-1");
  auto variance = [&](int offset) { return offset == 0 ? diag_variance : 0.5; };
  CMatrix m = CMatrix::Zero(n, n);
  switch (kind) {
    case SubspaceKind::ComplexSymmetric:
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const Complex v = rng.complex_normal(variance(j - i));
          m(i, j) = v;
          m(j, i) = v;
        }
      break;
    case SubspaceKind::Diagonal:
      for (int i = 0; i < n; ++i) m(i, i) = rng.complex_normal(diag_variance);
      break;
    case SubspaceKind::Band:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (std::abs(i - j) <= band) m(i, j) = rng.complex_normal(variance(j - i));
      break;
    case SubspaceKind::Toeplitz:
    case SubspaceKind::BandToeplitz: {
      const int reach = kind == SubspaceKind::Toeplitz ? n - 1 : band;
      for (int offset = -reach; offset <= reach; ++offset) {
        const Complex v = rng.complex_normal(variance(offset));
        for (int i = 0; i < n; ++i) {
          const int j = i + offset;
          if (j >= 0 && j < n) m(i, j) = v;
        }
      }
      break;
    }
  }
  return m;
}

/// One matrix drawn from the ensemble described by spec (scale applied).
inline CMatrix sample_matrix(const EnsembleSpec& spec, PhiloxStream& rng) {
  CMatrix m;
  switch (spec.kind) {
    case EnsembleKind::ComplexGinibre: m = sample_complex_ginibre(spec.n, spec.diag_variance, rng); break;
    case EnsembleKind::RealGinibre: m = sample_real_iid(spec.n, spec.entry_law, rng); break;
    case EnsembleKind::Goe: m = sample_goe(spec.n, rng); break;
    case EnsembleKind::Gue: m = sample_gue(spec.n, rng); break;
    case EnsembleKind::Wigner: m = sample_wigner(spec.n, spec.mu, spec.nu, rng); break;
    case EnsembleKind::Subspace:
      m = sample_subspace(spec.subspace, spec.n, rng, spec.band, spec.diag_variance);
      break;
  }
  if (spec.scale != 1.0) m *= spec.scale;
  return m;
}

inline void validate(const EnsembleSpec& spec) {
  if (spec.n < 1) throw InvalidArgument("ensemble size n must be positive");
  if (!(spec.scale > 0.0)) throw InvalidArgument("ensemble scale must be positive");
  if (!(spec.diag_variance >= 0.0)) throw InvalidArgument("diag_variance must be nonnegative");
  if ((spec.kind == EnsembleKind::Subspace) &&
      (spec.subspace == SubspaceKind::Band || spec.subspace == SubspaceKind::BandToeplitz) &&
      (spec.band < 0 || spec.band > spec.n - 1))
    throw InvalidArgument("band width must satisfy 0 <= k <= n-1");
}

/// Pencil of trial `trial_index` under `master_seed`: A then B from the trial's private stream.
inline Pencil sample_pencil(const EnsembleSpec& spec, std::uint64_t master_seed,
                            std::uint64_t trial_index) {
  validate(spec);
  PhiloxStream rng(master_seed, trial_index);
  Pencil p;
  p.spec = spec;
  p.a = sample_matrix(spec, rng);
  p.b = sample_matrix(spec, rng);
  p.seed_tag = trial_seed_tag(master_seed, trial_index);
  return p;
}

inline Pencil make_pencil(CMatrix a, CMatrix b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw InvalidArgument("pencil matrices must be square and of equal size");
  Pencil p;
  p.spec.n = static_cast<int>(a.rows());
  p.a = std::move(a);
  p.b = std::move(b);
  return p;
}

}  // namespace lcross
