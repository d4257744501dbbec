#ifndef FUELSIM_MONITOR_LEAK_HPP
#define FUELSIM_MONITOR_LEAK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fuelsim/core/units.hpp"
#include "fuelsim/monitor/alert.hpp"

namespace fuelsim::monitor {

struct TankReading {
  std::int64_t timestamp = 0;  // hour
  Volume level{};              // gauge reading
  std::int64_t temperature_cdeg = 0;
  Volume metered_sales{};
  Volume deliveries{};
};

/// Level change not explained by deliveries and metered sales, in gallons.
/// Persistently negative values mean product is disappearing.
inline double mass_balance_residual(const TankReading& r, Volume prev_level) {
  return to_gallons((r.level - prev_level) - (r.deliveries - r.metered_sales));
}

struct CusumState {
  double s_pos = 0.0;
  double s_neg = 0.0;
  double k = 0.5;
  double h = 5.0;
  bool alarmed = false;
  std::optional<std::int64_t> alarm_index;
  std::int64_t samples = 0;
};

/// Two-sided tabular CUSUM on a standardized sample. A leak (negative residual) drives s_neg.
inline CusumState cusum_update(CusumState s, double x) {
  s.s_pos = std::max(0.0, s.s_pos + x - s.k);
  s.s_neg = std::max(0.0, s.s_neg - x - s.k);
  if (!s.alarmed && (s.s_pos > s.h || s.s_neg > s.h)) {
    s.alarmed = true;
    s.alarm_index = s.samples;
  }
  ++s.samples;
  return s;
}

/// Hourly tank mass-balance monitor. The first `calibration_hours` residuals set
/// the noise scale; afterwards each standardized residual feeds a CUSUM.
class LeakDetector {
 public:
  LeakDetector(std::string asset_id, double k = 0.5, double h = 5.0, int calibration_hours = 48)
      : asset_(std::move(asset_id)), calibration_hours_(calibration_hours) {
    cusum_.k = k;
    cusum_.h = h;
  }

  /// Returns an alert on the first alarm only.
  std::optional<Alert> push(const TankReading& r) {
    if (!prev_) {
      prev_ = r.level;
      return std::nullopt;
    }
    const double res = mass_balance_residual(r, *prev_);
    prev_ = r.level;
    if (static_cast<int>(calibration_.size()) < calibration_hours_) {
      calibration_.push_back(res);
      if (static_cast<int>(calibration_.size()) == calibration_hours_) sigma_ = sample_sd(calibration_);
      return std::nullopt;
    }
    const double sd = sigma_ > 0.0 ? sigma_ : std::numeric_limits<double>::min();
    const bool was_alarmed = cusum_.alarmed;
    cusum_ = cusum_update(cusum_, res / sd);
    if (!was_alarmed && cusum_.alarmed && cusum_.s_neg > cusum_.h) {
      alarm_hour_ = r.timestamp;
      return make_alert(asset_, AlertKind::leak, Severity::urgent, r.timestamp, "mass-balance CUSUM alarm");
    }
    return std::nullopt;
  }

  const CusumState& cusum() const { return cusum_; }
  double sigma() const { return sigma_; }
  std::optional<std::int64_t> alarm_hour() const { return alarm_hour_; }

  static double sample_sd(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }

 private:
  std::string asset_;
  int calibration_hours_;
  std::optional<Volume> prev_;
  std::vector<double> calibration_;
  double sigma_ = 0.0;
  CusumState cusum_{};
  std::optional<std::int64_t> alarm_hour_;
};

}  // namespace fuelsim::monitor

#endif  // FUELSIM_MONITOR_LEAK_HPP
