#ifndef FUELSIM_SIM_FAULTS_HPP
#define FUELSIM_SIM_FAULTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fuelsim/core/error.hpp"

namespace fuelsim::sim {

enum class FaultKind { leak, vibration, battery, tire, fraud };

/// A scripted hardware or security fault.
///
/// magnitude meaning per kind:
///   leak      fraction of current tank volume lost per hour
///   vibration fault-tone amplitude as a multiple of the baseline tone amplitude
///   battery   single-sample voltage dropout in volts
///   tire      pressure lost per day in psi
///   fraud     expected unauthorized dispenses per hour
struct FaultInjection {
  FaultKind kind = FaultKind::leak;
  std::int64_t start_hour = 0;
  double magnitude = 0.0;
  int target = 0;  // dispenser or vehicle index where relevant

  bool active_at(std::int64_t hour) const { return hour >= start_hour; }
  bool operator==(const FaultInjection&) const = default;
};

inline std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::leak: return "leak";
    case FaultKind::vibration: return "vibration";
    case FaultKind::battery: return "battery";
    case FaultKind::tire: return "tire";
    case FaultKind::fraud: return "fraud";
  }
  return "?";
}

inline std::optional<FaultKind> parse_fault_kind(std::string_view s) {
  if (s == "leak") return FaultKind::leak;
  if (s == "vibration") return FaultKind::vibration;
  if (s == "battery") return FaultKind::battery;
  if (s == "tire") return FaultKind::tire;
  if (s == "fraud") return FaultKind::fraud;
  return std::nullopt;
}

/// Sum of the magnitudes of active faults of one kind.
inline double active_magnitude(const std::vector<FaultInjection>& faults, FaultKind kind, std::int64_t hour,
                               int target = -1) {
  double m = 0.0;
  for (const auto& f : faults)
    if (f.kind == kind && f.active_at(hour) && (target < 0 || f.target == target)) m += f.magnitude;
  return m;
}

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_FAULTS_HPP
