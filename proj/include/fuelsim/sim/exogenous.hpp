#ifndef FUELSIM_SIM_EXOGENOUS_HPP
#define FUELSIM_SIM_EXOGENOUS_HPP

#include <algorithm>
#include <cmath>
#include <utility>

#include "fuelsim/core/rng.hpp"
#include "fuelsim/sim/params.hpp"

namespace fuelsim::sim {

/// Advances the world one hour.
///
/// Weather and traffic are mean-reverting walks toward daypart targets, clamped to
/// [0,1]. Wholesale cost is a geometric walk; the competitor posts wholesale plus a
/// mean-reverting margin floored at zero. Local events start at midnight with a
/// fixed daily probability, last `event_days`, and lift the traffic target.
inline std::pair<ExogenousState, Rng64> step_exogenous(const ExogenousState& prev, const StationParams& params,
                                                       Rng64 rng) {
  const ExogenousParams& ep = params.exo;
  ExogenousState next = prev;

  next.hour_of_day = (prev.hour_of_day + 1) % kHoursPerDay;
  if (next.hour_of_day == 0) next.day_of_week = (prev.day_of_week + 1) % kDaysPerWeek;

  if (next.event_hours_left > 0) --next.event_hours_left;
  if (next.hour_of_day == 0 && next.event_hours_left == 0 && ep.event_daily_prob > 0.0 &&
      rng.bernoulli(ep.event_daily_prob)) {
    next.event_hours_left = ep.event_days * kHoursPerDay;
  }
  next.event_flag = next.event_hours_left > 0;

  const int dp = static_cast<int>(daypart_of(next.hour_of_day));
  const double weather_target = ep.weather_means[dp];
  double traffic_target = ep.traffic_means[dp];
  if (next.event_flag) traffic_target = std::min(1.0, traffic_target + ep.event_traffic_boost);

  const double zw = rng.gaussian();
  const double zt = rng.gaussian();
  const double zc = rng.gaussian();
  const double zm = rng.gaussian();

  next.weather_index = std::clamp(
      prev.weather_index + ep.index_reversion * (weather_target - prev.weather_index) + ep.index_step_sd * zw, 0.0,
      1.0);
  next.traffic_index = std::clamp(
      prev.traffic_index + ep.index_reversion * (traffic_target - prev.traffic_index) + ep.index_step_sd * zt, 0.0,
      1.0);

  const double hourly_sd = ep.wholesale_daily_sd / std::sqrt(static_cast<double>(kHoursPerDay));
  next.wholesale_cost = prev.wholesale_cost * std::exp(hourly_sd * zc);

  const double margin = prev.competitor_price - prev.wholesale_cost;
  const double next_margin =
      std::max(0.0, margin + ep.margin_reversion * (ep.margin_target - margin) + ep.margin_step_sd * zm);
  next.competitor_price = next.wholesale_cost + next_margin;

  return {next, rng};
}

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_EXOGENOUS_HPP
