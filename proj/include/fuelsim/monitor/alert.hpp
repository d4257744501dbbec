#ifndef FUELSIM_MONITOR_ALERT_HPP
#define FUELSIM_MONITOR_ALERT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fuelsim/core/units.hpp"

namespace fuelsim::monitor {

enum class AlertKind { leak, vibration_fault, battery, tire, fraud };
enum class Severity { advisory, urgent };

inline constexpr int kAlertKinds = 5;

inline std::string_view to_string(AlertKind k) {
  switch (k) {
    case AlertKind::leak: return "leak";
    case AlertKind::vibration_fault: return "vibration_fault";
    case AlertKind::battery: return "battery";
    case AlertKind::tire: return "tire";
    case AlertKind::fraud: return "fraud";
  }
  return "?";
}

inline std::string_view to_string(Severity s) { return s == Severity::urgent ? "urgent" : "advisory"; }

inline std::optional<AlertKind> parse_alert_kind(std::string_view s) {
  for (int i = 0; i < kAlertKinds; ++i)
    if (to_string(static_cast<AlertKind>(i)) == s) return static_cast<AlertKind>(i);
  return std::nullopt;
}

inline std::optional<Severity> parse_severity(std::string_view s) {
  if (s == "advisory") return Severity::advisory;
  if (s == "urgent") return Severity::urgent;
  return std::nullopt;
}

/// Service price per alert kind: leak $2500, vibration $400, battery $180, tire $25, fraud $0.
inline Money service_cost(AlertKind k) {
  switch (k) {
    case AlertKind::leak: return dollars(2500.0);
    case AlertKind::vibration_fault: return dollars(400.0);
    case AlertKind::battery: return dollars(180.0);
    case AlertKind::tire: return dollars(25.0);
    case AlertKind::fraud: return Money{0};
  }
  return Money{0};
}

struct Alert {
  std::string asset_id;
  AlertKind kind = AlertKind::leak;
  Severity severity = Severity::advisory;
  std::int64_t timestamp = 0;  // simulation hour
  std::string detail;
  Money estimated_cost{};

  bool operator==(const Alert&) const = default;
};

inline Alert make_alert(std::string asset, AlertKind kind, Severity sev, std::int64_t hour, std::string detail) {
  return Alert{std::move(asset), kind, sev, hour, std::move(detail), service_cost(kind)};
}

}  // namespace fuelsim::monitor

#endif  // FUELSIM_MONITOR_ALERT_HPP
