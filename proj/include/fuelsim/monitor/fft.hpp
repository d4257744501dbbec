#ifndef FUELSIM_MONITOR_FFT_HPP
#define FUELSIM_MONITOR_FFT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/monitor/alert.hpp"

namespace fuelsim::monitor {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 decimation-in-time FFT, X_k = sum_n x_n e^{-2 pi i k n / N}.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw Error("fft: length " + std::to_string(n) + " is not a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by repeated multiplication, to keep
      // rounding error flat across the stage.
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const std::complex<double> w(std::cos(ang), std::sin(ang));
      for (std::size_t i = k; i < n; i += len) {
        const std::complex<double> u = a[i];
        const std::complex<double> v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
}

inline std::vector<std::complex<double>> fft(std::span<const double> x) {
  std::vector<std::complex<double>> a(x.begin(), x.end());
  fft_inplace(a);
  return a;
}

struct Spectrum {
  std::vector<double> magnitudes;  // bins 0 .. N/2
  double sample_rate = 1.0;
  std::size_t n = 0;

  double bin_hz(std::size_t k) const { return static_cast<double>(k) * sample_rate / static_cast<double>(n); }

  /// Sum of |X_k|^2 over the full N-point spectrum of a real signal.
  double full_power() const {
    double s = 0.0;
    for (std::size_t k = 0; k < magnitudes.size(); ++k) {
      const double p = magnitudes[k] * magnitudes[k];
      s += (k == 0 || k == n / 2) ? p : 2.0 * p;
    }
    return s;
  }
};

inline Spectrum dft(std::span<const double> signal, double sample_rate) {
  if (signal.size() < 8 || !is_power_of_two(signal.size()))
    throw Error("dft: window length must be a power of two >= 8, got " + std::to_string(signal.size()));
  const auto x = fft(signal);
  Spectrum s;
  s.n = signal.size();
  s.sample_rate = sample_rate;
  s.magnitudes.resize(s.n / 2 + 1);
  for (std::size_t k = 0; k <= s.n / 2; ++k) s.magnitudes[k] = std::abs(x[k]);
  return s;
}

/// Power-mean of several spectra: sqrt(mean |X_k|^2) per bin.
inline Spectrum average_spectrum(std::span<const Spectrum> frames) {
  if (frames.empty()) throw Error("average_spectrum: no frames");
  Spectrum out = frames.front();
  for (std::size_t k = 0; k < out.magnitudes.size(); ++k) {
    double p = 0.0;
    for (const auto& f : frames) {
      if (f.n != out.n) throw Error("average_spectrum: mismatched window lengths");
      p += f.magnitudes[k] * f.magnitudes[k];
    }
    out.magnitudes[k] = std::sqrt(p / static_cast<double>(frames.size()));
  }
  return out;
}

struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
};

/// Bins covering [center - half_width, center + half_width] Hz.
inline BinRange band_around(double center_hz, double half_width_hz, std::size_t n, double sample_rate) {
  const double per_bin = sample_rate / static_cast<double>(n);
  const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor((center_hz - half_width_hz) / per_bin)));
  const auto hi = static_cast<std::size_t>(std::ceil((center_hz + half_width_hz) / per_bin));
  return {lo, std::min(hi, n / 2)};
}

inline double band_energy(const Spectrum& s, BinRange band) {
  double e = 0.0;
  for (std::size_t k = band.first; k <= band.last && k < s.magnitudes.size(); ++k) e += s.magnitudes[k] * s.magnitudes[k];
  return e;
}

inline double band_energy_ratio(const Spectrum& s, const Spectrum& baseline, BinRange band) {
  if (s.n != baseline.n || s.sample_rate != baseline.sample_rate)
    throw Error("spectral_fault: spectrum and baseline differ in length or sample rate");
  if (band.first > band.last || band.last >= s.magnitudes.size()) throw Error("spectral_fault: band out of range");
  const double base = band_energy(baseline, band);
  const double cur = band_energy(s, band);
  if (base <= 0.0) return cur > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return cur / base;
}

inline constexpr double kDefaultBandRatio = 4.0;

/// Vibration fault when the band carries more than `ratio_threshold` times its baseline energy.
/// Above four times the threshold the alert is urgent.
inline std::optional<Alert> spectral_fault(const Spectrum& s, const Spectrum& baseline, BinRange band,
                                           double ratio_threshold, const std::string& asset_id,
                                           std::int64_t hour) {
  const double ratio = band_energy_ratio(s, baseline, band);
  if (!(ratio > ratio_threshold)) return std::nullopt;
  const Severity sev = ratio > 4.0 * ratio_threshold ? Severity::urgent : Severity::advisory;
  char buf[64];
  std::snprintf(buf, sizeof buf, "band_ratio_milli=%lld", static_cast<long long>(std::llround(std::min(ratio, 1e12) * 1000.0)));
  return make_alert(asset_id, AlertKind::vibration_fault, sev, hour, buf);
}

}  // namespace fuelsim::monitor

#endif  // FUELSIM_MONITOR_FFT_HPP
