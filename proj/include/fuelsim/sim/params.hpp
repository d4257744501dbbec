#ifndef FUELSIM_SIM_PARAMS_HPP
#define FUELSIM_SIM_PARAMS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "fuelsim/core/error.hpp"
#include "fuelsim/core/units.hpp"

namespace fuelsim::sim {

enum class CheckoutMode { manual, smart };

inline constexpr int kHoursPerDay = 24;
inline constexpr int kDaysPerWeek = 7;

/// Daypart segments used by the demand processes and by pricing state.
enum class Daypart { night, morning, midday, evening };

constexpr Daypart daypart_of(int hour) {
  if (hour >= 6 && hour <= 10) return Daypart::morning;
  if (hour >= 11 && hour <= 16) return Daypart::midday;
  if (hour >= 17 && hour <= 21) return Daypart::evening;
  return Daypart::night;
}

/// World-factor processes: weather, traffic, wholesale and competitor pricing, local events.
struct ExogenousParams {
  double index_reversion = 0.1;
  double index_step_sd = 0.05;
  // night, morning, midday, evening
  std::array<double, 4> weather_means{0.35, 0.30, 0.25, 0.30};
  std::array<double, 4> traffic_means{0.15, 0.70, 0.50, 0.75};
  double margin_target = 0.25;      // $/gal
  double margin_reversion = 0.01;   // per hour
  double margin_step_sd = 0.005;    // $/gal per hour
  double wholesale_daily_sd = 0.005;
  double initial_wholesale = 2.75;  // $/gal
  double event_daily_prob = 0.04;
  int event_days = 4;
  double event_traffic_boost = 0.45;
};

/// Simulated IoT hardware attached to the station.
struct SensorParams {
  double gauge_noise_sd = 2.0;  // gallons
  double tank_temp_mean = 15.0;
  double tank_temp_swing = 3.0;
  int dispensers = 4;
  int vibration_frame_len = 1024;
  double vibration_sample_rate = 1000.0;
  std::array<double, 3> vibration_tones_hz{29.0, 58.0, 247.0};
  double vibration_tone_amplitude = 1.0;
  double vibration_noise_sd = 0.5;
  double fault_tone_hz = 120.0;
  int fleet_vehicles = 10;
  double battery_nominal = 12.6;
  double battery_ar = 0.8;
  double battery_noise_sd = 0.02;
  double tire_nominal_psi = 32.0;
  double tire_noise_sd = 0.3;
};

struct StationParams {
  double base_arrival_rate = 20.0;  // fueling customers per hour
  std::array<double, kHoursPerDay> daypart_multipliers{
      0.30, 0.25, 0.20, 0.20, 0.30, 0.55,   // 00-05
      1.10, 1.60, 1.70, 1.30, 1.05,         // 06-10
      1.00, 1.10, 1.15, 1.05, 1.10, 1.30,   // 11-16
      1.65, 1.70, 1.40, 1.10, 0.85,         // 17-21
      0.60, 0.40};                          // 22-23
  double weather_damping = 0.4;
  double traffic_gain = 0.5;
  double elasticity_beta = 2.0;  // per $/gal of price gap
  double gallons_mean = 12.0;
  double gallons_sd = 3.0;
  double shop_attach_prob = 0.30;
  double shop_only_rate = 2.0;  // walk-in customers per hour, before daypart scaling
  double tank_capacity = 48000.0;
  double initial_tank_level = 40000.0;
  int delivery_lead_time = 24;  // hours
  CheckoutMode checkout_mode = CheckoutMode::smart;
  double recognition_success_prob = 0.979;
  double manual_checkout_mean = 150.0;  // seconds
  double smart_checkout_mean = 55.0;    // seconds
  int repeat_users = 200;
  double retention_at_parity = 0.6;  // repeat-visit probability when priced at the competitor
  double retention_slope = 10.0;     // logit change per $/gal of smoothed gap
  double retention_smoothing = 0.05;
  ExogenousParams exo{};
  SensorParams sensors{};
};

namespace detail {
inline void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}
inline bool finite(double x) { return std::isfinite(x); }
}  // namespace detail

/// Throws ConfigError naming the first field that breaks an invariant.
inline void validate(const StationParams& p) {
  using detail::finite;
  using detail::require;
  require(finite(p.base_arrival_rate) && p.base_arrival_rate >= 0.0, "base_arrival_rate", "must be >= 0");
  for (double m : p.daypart_multipliers)
    require(finite(m) && m > 0.0, "daypart_multipliers", "every multiplier must be > 0");
  require(finite(p.weather_damping) && p.weather_damping >= 0.0 && p.weather_damping <= 1.0,
          "weather_damping", "must be in [0,1]");
  require(finite(p.traffic_gain) && p.traffic_gain >= 0.0, "traffic_gain", "must be >= 0");
  require(finite(p.elasticity_beta) && p.elasticity_beta >= 0.0, "elasticity_beta", "must be >= 0");
  require(finite(p.gallons_mean) && p.gallons_mean > 0.0, "gallons_mean", "must be > 0");
  require(finite(p.gallons_sd) && p.gallons_sd >= 0.0, "gallons_sd", "must be >= 0");
  require(p.gallons_mean - 3.0 * p.gallons_sd > 0.0, "gallons_sd", "gallons_mean - 3*gallons_sd must be > 0");
  require(p.shop_attach_prob >= 0.0 && p.shop_attach_prob <= 1.0, "shop_attach_prob", "must be in [0,1]");
  require(finite(p.shop_only_rate) && p.shop_only_rate >= 0.0, "shop_only_rate", "must be >= 0");
  require(finite(p.tank_capacity) && p.tank_capacity > 0.0, "tank_capacity", "must be > 0");
  require(p.initial_tank_level >= 0.0 && p.initial_tank_level <= p.tank_capacity, "initial_tank_level",
          "must be in [0, tank_capacity]");
  require(p.delivery_lead_time >= 1, "delivery_lead_time", "must be >= 1 hour");
  require(p.recognition_success_prob >= 0.0 && p.recognition_success_prob <= 1.0,
          "recognition_success_prob", "must be in [0,1]");
  require(finite(p.manual_checkout_mean) && p.manual_checkout_mean > 0.0, "manual_checkout_mean", "must be > 0");
  require(finite(p.smart_checkout_mean) && p.smart_checkout_mean > 0.0, "smart_checkout_mean", "must be > 0");
  require(p.repeat_users >= 1, "repeat_users", "must be >= 1");
  require(p.retention_at_parity > 0.0 && p.retention_at_parity < 1.0, "retention_at_parity", "must be in (0,1)");
  require(p.retention_smoothing > 0.0 && p.retention_smoothing <= 1.0, "retention_smoothing", "must be in (0,1]");
  require(p.exo.index_reversion >= 0.0 && p.exo.index_reversion <= 1.0, "index_reversion", "must be in [0,1]");
  require(p.exo.index_step_sd >= 0.0, "index_step_sd", "must be >= 0");
  require(p.exo.margin_target >= 0.0, "margin_target", "must be >= 0");
  require(p.exo.margin_reversion >= 0.0 && p.exo.margin_reversion <= 1.0, "margin_reversion", "must be in [0,1]");
  require(p.exo.margin_step_sd >= 0.0, "margin_step_sd", "must be >= 0");
  require(p.exo.wholesale_daily_sd >= 0.0, "wholesale_daily_sd", "must be >= 0");
  require(p.exo.initial_wholesale > 0.0, "initial_wholesale", "must be > 0");
  require(p.exo.event_daily_prob >= 0.0 && p.exo.event_daily_prob <= 1.0, "event_daily_prob", "must be in [0,1]");
  require(p.exo.event_days >= 1, "event_days", "must be >= 1");
  require(p.sensors.dispensers >= 1, "dispensers", "must be >= 1");
  const int n = p.sensors.vibration_frame_len;
  require(n >= 8 && (n & (n - 1)) == 0, "vibration_frame_len", "must be a power of two >= 8");
  require(p.sensors.vibration_sample_rate > 0.0, "vibration_sample_rate", "must be > 0");
  require(p.sensors.gauge_noise_sd >= 0.0, "gauge_noise_sd", "must be >= 0");
  require(p.sensors.fleet_vehicles >= 0, "fleet_vehicles", "must be >= 0");
}

/// The world factors that drive demand at a given hour.
struct ExogenousState {
  double weather_index = 0.3;      // 0 mild .. 1 adverse
  double traffic_index = 0.5;
  double competitor_price = 3.00;  // $/gal
  double wholesale_cost = 2.75;    // $/gal
  int hour_of_day = 0;
  int day_of_week = 0;
  bool event_flag = false;
  int event_hours_left = 0;

  Price competitor_cents() const { return dollars_per_gallon(competitor_price); }
  Price wholesale_cents() const { return dollars_per_gallon(wholesale_cost); }

  bool operator==(const ExogenousState&) const = default;
};

inline ExogenousState initial_exogenous(const StationParams& p) {
  ExogenousState s;
  s.weather_index = p.exo.weather_means[static_cast<int>(Daypart::night)];
  s.traffic_index = p.exo.traffic_means[static_cast<int>(Daypart::night)];
  s.wholesale_cost = p.exo.initial_wholesale;
  s.competitor_price = p.exo.initial_wholesale + p.exo.margin_target;
  // Hour 23 of the last weekday so the first step lands on hour 0, day 0.
  s.hour_of_day = 23;
  s.day_of_week = 6;
  return s;
}

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_PARAMS_HPP
