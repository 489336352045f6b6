#pragma once

// Counter-based random streams.
//
// Philox4x64-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3")
// keyed by (master_seed, stream_index). Every Monte Carlo trial owns the
// stream (master_seed, trial_index); the k-th 64-bit output of a stream is
// a pure function of (master_seed, stream_index, k), so results do not depend
// on which thread ran which trial.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

namespace lcross {

class PhiloxStream {
 public:
  using result_type = std::uint64_t;

  PhiloxStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : key_{master_seed, stream_index} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (lane_ == 4) {
      block_ = generate_block(counter_, key_);
      ++counter_;
      lane_ = 0;
    }
    return block_[lane_++];
  }

  /// Uniform double in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; platform independent unlike std::normal_distribution.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Complex Gaussian with independent N(0, v) real and imaginary parts.
  std::complex<double> complex_normal(double per_component_variance) {
    const double s = std::sqrt(per_component_variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  /// Fair coin: +1 or -1.
  double sign() { return ((*this)() >> 63) ? 1.0 : -1.0; }

  std::uint64_t master_seed() const { return key_[0]; }
  std::uint64_t stream_index() const { return key_[1]; }

  static std::array<std::uint64_t, 4> generate_block(std::uint64_t counter,
                                                     std::array<std::uint64_t, 2> key) {
    constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
    std::array<std::uint64_t, 4> c{counter, 0, 0, 0};
    for (int round = 0; round < 10; ++round) {
      const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * c[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * c[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return c;
  }

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 4> block_{};
  int lane_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit tag identifying a trial, stable across runs.
inline std::uint64_t trial_seed_tag(std::uint64_t master_seed, std::uint64_t trial_index) {
  return PhiloxStream::generate_block(0xFFFFFFFFFFFFFFFFULL, {master_seed, trial_index})[0];
}

}  // namespace lcross
