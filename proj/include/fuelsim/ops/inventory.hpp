#ifndef FUELSIM_OPS_INVENTORY_HPP
#define FUELSIM_OPS_INVENTORY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "fuelsim/core/error.hpp"
#include "fuelsim/core/units.hpp"
#include "fuelsim/forecast/arx.hpp"
#include "fuelsim/sim/params.hpp"

namespace fuelsim::ops {

enum class PolicyKind { forecast_driven, fixed_schedule };

inline std::string to_string(PolicyKind k) { return k == PolicyKind::forecast_driven ? "forecast_driven" : "fixed_schedule"; }

struct InventoryParams {
  PolicyKind kind = PolicyKind::forecast_driven;
  double service_level_z = 1.64;
  double order_up_to = 30000.0;  // gallons
  int lead_time = 24;            // hours; mirrors the station's delivery lead time
  double holding_cost = 0.002;   // $/gal/day
  double stockout_penalty = 15.0;  // $ per turned-away customer
  int fixed_interval = 168;      // hours, fixed_schedule only
  int review_interval = 24;      // the review cadence; part of the protection interval
};

inline void validate(const InventoryParams& p, double tank_capacity) {
  auto req = [](bool ok, const char* field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
  };
  req(p.service_level_z >= 0.0, "service_level_z", "must be >= 0");
  req(p.order_up_to > 0.0, "order_up_to", "must be > 0");
  req(p.order_up_to <= tank_capacity, "order_up_to", "must not exceed tank_capacity");
  req(p.lead_time >= 1, "lead_time", "must be >= 1");
  req(p.holding_cost >= 0.0, "holding_cost", "must be >= 0");
  req(p.stockout_penalty >= 0.0, "stockout_penalty", "must be >= 0");
  req(p.fixed_interval >= 1 && p.fixed_interval % sim::kHoursPerDay == 0, "fixed_interval",
      "must be a positive multiple of 24");
  req(p.review_interval == sim::kHoursPerDay, "review_interval", "must be 24");
}

/// Reorder point: expected lead-time demand plus z standard deviations of safety stock.
inline double reorder_point(double lead_demand, double sigma_lead, double z) { return lead_demand + z * sigma_lead; }

struct DemandOutlook {
  double lead_demand = 0.0;  // gallons over the protection interval
  double sigma = 0.0;        // gallons
};

struct DemandHistory {
  std::span<const double> gallons;  // hourly sales, oldest first
  std::span<const sim::ExogenousState> exo;  // world state of each of those hours
};

/// Expected demand over the next `horizon` hours. Uses the forecaster once it is
/// fitted, else the sample mean and sd of the history.
template <forecast::Forecaster F>
DemandOutlook lead_time_outlook(const F& f, const DemandHistory& h, int horizon, std::size_t min_recent) {
  DemandOutlook o;
  if (h.gallons.empty()) return o;
  const double hz = static_cast<double>(horizon);
  if (f.ready() && h.gallons.size() >= min_recent && !h.exo.empty()) {
    for (double y : forecast::forecast_path(f, h.gallons, h.exo.back(), static_cast<std::size_t>(horizon))) o.lead_demand += y;
    o.sigma = f.residual_sd() * std::sqrt(hz);
    return o;
  }
  double mean = 0.0;
  for (double y : h.gallons) mean += y;
  mean /= static_cast<double>(h.gallons.size());
  double ss = 0.0;
  for (double y : h.gallons) ss += (y - mean) * (y - mean);
  const double sd = h.gallons.size() > 1 ? std::sqrt(ss / static_cast<double>(h.gallons.size() - 1)) : 0.0;
  o.lead_demand = mean * hz;
  o.sigma = sd * std::sqrt(hz);
  return o;
}

/// Order decision at hour boundary `time`. At most one order is outstanding, so
/// any pending quantity blocks a new order.
inline std::optional<Volume> inventory_decision(Volume level, Volume pending, const InventoryParams& policy,
                                                const DemandOutlook& outlook, std::int64_t time) {
  if (pending.raw > 0) return std::nullopt;
  const Volume target = gallons(policy.order_up_to);
  if (policy.kind == PolicyKind::fixed_schedule) {
    if (time % policy.fixed_interval != 0) return std::nullopt;
    const Volume q = target - level;
    return q.raw > 0 ? std::optional<Volume>(q) : std::nullopt;
  }
  const double rop = reorder_point(outlook.lead_demand, outlook.sigma, policy.service_level_z);
  if (to_gallons(level) >= rop) return std::nullopt;
  const Volume q = target - level;
  return q.raw > 0 ? std::optional<Volume>(q) : std::nullopt;
}

template <forecast::Forecaster F>
std::optional<Volume> inventory_decision(Volume level, Volume pending, const InventoryParams& policy, const F& forecaster,
                                         const DemandHistory& history, std::int64_t time, std::size_t min_recent) {
  DemandOutlook o;
  if (policy.kind == PolicyKind::forecast_driven)
    o = lead_time_outlook(forecaster, history, policy.lead_time + policy.review_interval, min_recent);
  return inventory_decision(level, pending, policy, o, time);
}

}  // namespace fuelsim::ops

#endif  // FUELSIM_OPS_INVENTORY_HPP
