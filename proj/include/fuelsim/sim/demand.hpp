#ifndef FUELSIM_SIM_DEMAND_HPP
#define FUELSIM_SIM_DEMAND_HPP

#include <algorithm>
#include <cmath>

#include "fuelsim/core/units.hpp"
#include "fuelsim/sim/params.hpp"

namespace fuelsim::sim {

/// Posted price minus competitor price, in dollars per gallon.
inline double price_gap(Price posted, const ExogenousState& exo) {
  return to_dollars(posted - exo.competitor_cents());
}

/// Fueling customers per hour at the posted price.
inline double demand_rate(Price posted, const ExogenousState& exo, const StationParams& p) {
  const double context = p.base_arrival_rate * p.daypart_multipliers[exo.hour_of_day] *
                         (1.0 - p.weather_damping * exo.weather_index) * (1.0 + p.traffic_gain * exo.traffic_index);
  const double elasticity = std::exp(-p.elasticity_beta * price_gap(posted, exo));
  return std::max(0.0, context * elasticity);
}

/// Demand at competitor parity with neutral weather and traffic.
inline double base_daypart_rate(int hour, const StationParams& p) {
  return p.base_arrival_rate * p.daypart_multipliers[hour];
}

/// Repeat-visit probability as a logistic function of the smoothed price gap.
/// This form is a modelling assumption; nothing calibrates it.
inline double repeat_probability(double smoothed_gap, const StationParams& p) {
  const double logit0 = std::log(p.retention_at_parity / (1.0 - p.retention_at_parity));
  return 1.0 / (1.0 + std::exp(-(logit0 - p.retention_slope * smoothed_gap)));
}

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_DEMAND_HPP
