#ifndef FUELSIM_MONITOR_FRAUD_HPP
#define FUELSIM_MONITOR_FRAUD_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/monitor/alert.hpp"

namespace fuelsim::monitor {

struct DispenserEvent {
  int dispenser = 0;
  std::int64_t sec = 0;  // absolute simulation second
  bool operator==(const DispenserEvent&) const = default;
};

inline constexpr std::int64_t kDefaultAuthWindowSec = 120;

inline void require_time_ordered(std::span<const DispenserEvent> ev, const char* what) {
  for (std::size_t i = 1; i < ev.size(); ++i)
    if (ev[i].sec < ev[i - 1].sec)
      throw Error(std::string("dispenser_fraud: ") + what + " events out of time order at index " + std::to_string(i));
}

/// Flags every flow with no authorization on the same dispenser in the preceding `window` seconds
/// (inclusive at both ends).
inline std::vector<Alert> dispenser_fraud(std::span<const DispenserEvent> flows, std::span<const DispenserEvent> auths,
                                          std::int64_t window = kDefaultAuthWindowSec) {
  require_time_ordered(flows, "flow");
  require_time_ordered(auths, "authorization");
  std::vector<Alert> alerts;
  std::map<int, std::int64_t> last_auth;
  std::size_t ai = 0;
  for (const DispenserEvent& f : flows) {
    while (ai < auths.size() && auths[ai].sec <= f.sec) {
      last_auth[auths[ai].dispenser] = auths[ai].sec;
      ++ai;
    }
    const auto it = last_auth.find(f.dispenser);
    if (it == last_auth.end() || f.sec - it->second > window) {
      alerts.push_back(make_alert("dispenser-" + std::to_string(f.dispenser), AlertKind::fraud, Severity::urgent,
                                  f.sec / 3600, "flow without authorization at t=" + std::to_string(f.sec) + "s"));
    }
  }
  return alerts;
}

}  // namespace fuelsim::monitor

#endif  // FUELSIM_MONITOR_FRAUD_HPP
