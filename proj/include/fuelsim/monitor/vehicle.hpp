#ifndef FUELSIM_MONITOR_VEHICLE_HPP
#define FUELSIM_MONITOR_VEHICLE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/monitor/alert.hpp"

namespace fuelsim::monitor {

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw Error("median of empty sample");
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

inline constexpr double kMadToSigma = 1.4826;
inline constexpr double kBatteryZLimit = 6.0;

struct Ar1Fit {
  double intercept = 0.0;
  double phi = 0.0;
};

/// Least-squares fit of v_t = c + phi v_{t-1} over the given samples.
inline Ar1Fit fit_ar1(std::span<const double> v) {
  const std::size_t m = v.size() - 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t t = 1; t < v.size(); ++t) {
    sx += v[t - 1];
    sy += v[t];
    sxx += v[t - 1] * v[t - 1];
    sxy += v[t - 1] * v[t];
  }
  const double n = static_cast<double>(m);
  const double den = n * sxx - sx * sx;
  Ar1Fit f;
  if (std::abs(den) <= 1e-12 * std::max(1.0, n * sxx)) {
    f.phi = 0.0;
    f.intercept = sy / n;
  } else {
    f.phi = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.phi * sx) / n;
  }
  return f;
}

struct BatteryFinding {
  std::size_t index = 0;
  double z = 0.0;
};

/// Robust z-scores of AR(1) residuals on the last 20% of the series, scaled by the
/// median and MAD of the residuals on the first 80%. Returns the first point with |z| > 6.
inline std::optional<BatteryFinding> battery_scan(std::span<const double> volts) {
  if (volts.size() < 20) throw Error("battery_anomaly: need at least 20 samples, got " + std::to_string(volts.size()));
  const std::size_t n_fit = volts.size() * 4 / 5;
  const Ar1Fit f = fit_ar1(volts.first(n_fit));
  std::vector<double> fit_res;
  for (std::size_t t = 1; t < n_fit; ++t) fit_res.push_back(volts[t] - f.intercept - f.phi * volts[t - 1]);
  const double med = median(fit_res);
  std::vector<double> dev;
  for (double r : fit_res) dev.push_back(std::abs(r - med));
  const double scale = kMadToSigma * median(dev);
  for (std::size_t t = n_fit; t < volts.size(); ++t) {
    const double r = volts[t] - f.intercept - f.phi * volts[t - 1] - med;
    const double z = scale > 0.0 ? r / scale : (std::abs(r) > 1e-9 ? (r > 0 ? 1e300 : -1e300) : 0.0);
    if (std::abs(z) > kBatteryZLimit) return BatteryFinding{t, z};
  }
  return std::nullopt;
}

inline std::optional<Alert> battery_anomaly(std::span<const double> volts, const std::string& asset_id,
                                            std::int64_t first_hour) {
  const auto finding = battery_scan(volts);
  if (!finding) return std::nullopt;
  char buf[64];
  std::snprintf(buf, sizeof buf, "residual_z_milli=%lld", static_cast<long long>(std::llround(std::clamp(finding->z, -1e9, 1e9) * 1000.0)));
  return make_alert(asset_id, AlertKind::battery, Severity::advisory,
                    first_hour + static_cast<std::int64_t>(finding->index), buf);
}

inline constexpr double kTireLowPsi = 28.0;
inline constexpr double kTireHighPsi = 36.0;
inline constexpr double kTireUrgentPsi = 22.0;

inline std::optional<Alert> tire_check(double psi, const std::string& asset_id = "tire", std::int64_t hour = 0) {
  if (psi < 0.0) throw Error("tire_check: negative pressure");
  char buf[48];
  std::snprintf(buf, sizeof buf, "pressure_cpsi=%lld", static_cast<long long>(std::llround(std::min(psi, 1e9) * 100.0)));
  if (psi < kTireUrgentPsi) return make_alert(asset_id, AlertKind::tire, Severity::urgent, hour, buf);
  if (psi < kTireLowPsi || psi > kTireHighPsi) return make_alert(asset_id, AlertKind::tire, Severity::advisory, hour, buf);
  return std::nullopt;
}

}  // namespace fuelsim::monitor

#endif  // FUELSIM_MONITOR_VEHICLE_HPP
