#ifndef FUELSIM_CORE_RNG_HPP
#define FUELSIM_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace fuelsim {

/// SplitMix64 generator. The whole simulator draws from values of this type,
/// so a run is reproducible from its seed alone.
struct Rng64 {
  std::uint64_t state = 0;

  constexpr Rng64() = default;
  constexpr explicit Rng64(std::uint64_t seed) : state(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Uses the multiply-shift reduction; bias is below 2^-32 for small n.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller; one variate per call, nothing cached.
  double gaussian() noexcept {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double sd) noexcept { return mean + sd * gaussian(); }

  double exponential(double mean) noexcept { return -mean * std::log1p(-uniform()); }

  /// Inversion below rate 30, rounded Gaussian approximation above.
  std::int64_t poisson(double rate) noexcept {
    if (!(rate > 0.0)) return 0;
    if (rate < 30.0) {
      const double u = uniform();
      double p = std::exp(-rate);
      double cdf = p;
      std::int64_t k = 0;
      while (u > cdf && k < 1000) {
        ++k;
        p *= rate / static_cast<double>(k);
        cdf += p;
      }
      return k;
    }
    const double x = std::round(gaussian(rate, std::sqrt(rate)));
    return x < 0.0 ? 0 : static_cast<std::int64_t>(x);
  }

  /// Independent stream for a named sub-purpose, derived without disturbing this one.
  constexpr Rng64 fork(std::uint64_t salt) const noexcept {
    Rng64 mixer{state ^ (salt * 0xD1B54A32D192ED03ULL)};
    return Rng64{mixer.next()};
  }
};

/// Pure form of the generator step: returns the advanced state and the output.
constexpr std::pair<Rng64, std::uint64_t> rng_next(Rng64 rng) noexcept {
  const std::uint64_t out = rng.next();
  return {rng, out};
}

}  // namespace fuelsim

#endif  // FUELSIM_CORE_RNG_HPP
