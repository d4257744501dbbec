#ifndef FUELSIM_OPS_MAINTENANCE_HPP
#define FUELSIM_OPS_MAINTENANCE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/core/units.hpp"
#include "fuelsim/monitor/alert.hpp"

namespace fuelsim::ops {

struct MaintenanceSlot {
  std::int64_t slot_id = 0;
  std::int64_t start_hour = 0;
  std::optional<std::string> asset_id;  // set once booked
  bool booked = false;
  Money estimated_cost{};
  bool operator==(const MaintenanceSlot&) const = default;
};

struct Booking {
  std::size_t alert_index = 0;  // into the alerts passed to schedule_service
  std::int64_t slot_id = 0;
  std::int64_t start_hour = 0;
  Money cost{};
  bool operator==(const Booking&) const = default;
};

/// Urgent before advisory, then earlier timestamp, then asset id.
inline bool service_priority_less(const monitor::Alert& a, const monitor::Alert& b) {
  const int ua = a.severity == monitor::Severity::urgent ? 0 : 1;
  const int ub = b.severity == monitor::Severity::urgent ? 0 : 1;
  return std::tie(ua, a.timestamp, a.asset_id) < std::tie(ub, b.timestamp, b.asset_id);
}

/// Greedy assignment: alerts in priority order each take the earliest open slot
/// starting at or after the alert. Slots must be ordered by start_hour; booked
/// slots are updated in place.
inline std::vector<Booking> schedule_service(std::span<const monitor::Alert> alerts, std::vector<MaintenanceSlot>& slots) {
  for (std::size_t i = 1; i < slots.size(); ++i)
    if (slots[i].start_hour < slots[i - 1].start_hour) throw Error("schedule_service: slots not time-ordered");
  std::vector<std::size_t> order(alerts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return service_priority_less(alerts[x], alerts[y]); });
  std::vector<Booking> out;
  for (std::size_t ai : order) {
    const monitor::Alert& a = alerts[ai];
    for (MaintenanceSlot& s : slots) {
      if (s.booked || s.start_hour < a.timestamp) continue;
      s.booked = true;
      s.asset_id = a.asset_id;
      s.estimated_cost = monitor::service_cost(a.kind);
      out.push_back({ai, s.slot_id, s.start_hour, s.estimated_cost});
      break;
    }
  }
  return out;
}

}  // namespace fuelsim::ops

#endif  // FUELSIM_OPS_MAINTENANCE_HPP
