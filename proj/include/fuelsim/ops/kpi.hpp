#ifndef FUELSIM_OPS_KPI_HPP
#define FUELSIM_OPS_KPI_HPP

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/core/units.hpp"
#include "fuelsim/monitor/alert.hpp"
#include "fuelsim/sim/episode.hpp"

namespace fuelsim::ops {

/// Holding cost in millicents per gallon per day; $0.002/gal/day by default.
struct KpiParams {
  std::int64_t holding_mc_per_gal_day = 200;
};

/// Hourly holding charge on the end-of-hour book level, rounded half up to a millicent.
inline Money hourly_holding_cost(Volume level, const KpiParams& p) {
  const std::int64_t denom = sim::kHoursPerDay * kMgalPerGallon;
  return Money{(level.raw * p.holding_mc_per_gal_day + denom / 2) / denom};
}

struct KpiReport {
  std::int64_t first_hour = 0;
  std::int64_t end_hour = 0;  // exclusive
  Money total_margin{};
  Money revenue{};
  Volume gallons_sold{};
  std::int64_t stockout_customers = 0;
  Money holding_cost_total{};
  std::int64_t fueling_visits = 0;
  std::int64_t basket_visits = 0;  // fueling visits that also bought shop items
  std::int64_t checkouts = 0;
  std::int64_t checkout_ms_total = 0;
  std::int64_t forecast_points = 0;
  __int128 forecast_sq_err_mgal2 = 0;
  std::array<std::int64_t, monitor::kAlertKinds> alerts_by_kind{};

  double forecast_mse() const {
    if (forecast_points == 0) return 0.0;
    return static_cast<double>(forecast_sq_err_mgal2) / 1e6 / static_cast<double>(forecast_points);
  }
  double attach_rate() const {
    return fueling_visits == 0 ? 0.0 : static_cast<double>(basket_visits) / static_cast<double>(fueling_visits);
  }
  double mean_checkout_seconds() const {
    return checkouts == 0 ? 0.0 : static_cast<double>(checkout_ms_total) / 1000.0 / static_cast<double>(checkouts);
  }

  KpiReport& operator+=(const KpiReport& o) {
    end_hour = o.end_hour;
    total_margin += o.total_margin;
    revenue += o.revenue;
    gallons_sold += o.gallons_sold;
    stockout_customers += o.stockout_customers;
    holding_cost_total += o.holding_cost_total;
    fueling_visits += o.fueling_visits;
    basket_visits += o.basket_visits;
    checkouts += o.checkouts;
    checkout_ms_total += o.checkout_ms_total;
    forecast_points += o.forecast_points;
    forecast_sq_err_mgal2 += o.forecast_sq_err_mgal2;
    for (int k = 0; k < monitor::kAlertKinds; ++k) alerts_by_kind[static_cast<std::size_t>(k)] += o.alerts_by_kind[static_cast<std::size_t>(k)];
    return *this;
  }

  bool operator==(const KpiReport&) const = default;
};

/// Half-open range of simulation hours.
struct Period {
  std::int64_t first_hour = 0;
  std::int64_t end_hour = 0;
};

inline Period day_period(std::int64_t first_day, std::int64_t last_day) {
  return {first_day * sim::kHoursPerDay, (last_day + 1) * sim::kHoursPerDay};
}

/// Pure aggregation of the hours in `period`. `alerts` supplies the per-kind
/// counts, attributed by timestamp.
inline KpiReport emit_kpi_report(const sim::EpisodeLog& log, Period period, const std::vector<monitor::Alert>& alerts,
                                 const KpiParams& params = {}) {
  const std::int64_t h0 = period.first_hour;
  const std::int64_t h1 = period.end_hour;
  if (h1 <= h0) throw Error("emit_kpi_report: empty period");
  if (h0 < 0 || h1 > static_cast<std::int64_t>(log.hours.size()))
    throw Error("emit_kpi_report: period outside the log");
  KpiReport k;
  k.first_hour = h0;
  k.end_hour = h1;
  for (std::int64_t h = h0; h < h1; ++h) {
    const sim::HourRecord& r = log.hours[static_cast<std::size_t>(h)];
    k.total_margin += r.margin();
    k.revenue += r.revenue;
    k.gallons_sold += r.gallons_sold;
    k.stockout_customers += r.turned_away;
    k.holding_cost_total += hourly_holding_cost(r.tank_level, params);
    if (r.forecast) {
      const __int128 e = r.gallons_sold.raw - r.forecast->raw;
      k.forecast_sq_err_mgal2 += e * e;
      ++k.forecast_points;
    }
  }
  // Visits are stored in hour order.
  auto it = std::lower_bound(log.visits.begin(), log.visits.end(), h0,
                             [](const sim::CustomerVisit& v, std::int64_t h) { return v.hour < h; });
  for (; it != log.visits.end() && it->hour < h1; ++it) {
    if (it->kind == sim::VisitKind::fuel) {
      ++k.fueling_visits;
      if (!it->basket.empty()) ++k.basket_visits;
    }
    if (it->kind == sim::VisitKind::fuel || it->kind == sim::VisitKind::shop_only) {
      ++k.checkouts;
      k.checkout_ms_total += it->checkout_ms;
    }
  }
  for (const auto& a : alerts)
    if (a.timestamp >= h0 && a.timestamp < h1) ++k.alerts_by_kind[static_cast<std::size_t>(a.kind)];
  return k;
}

// ---- formatting --------------------------------------------------------------

/// Exact decimal rendering of a fixed-point integer with `digits` fractional digits.
inline std::string fixed_point(std::int64_t raw, int digits) {
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const bool neg = raw < 0;
  const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(raw + 1)) + 1 : static_cast<std::uint64_t>(raw);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%" PRIu64 ".%0*" PRIu64, neg ? "-" : "", mag / static_cast<std::uint64_t>(scale),
                digits, mag % static_cast<std::uint64_t>(scale));
  return buf;
}

inline std::string money_str(Money m) { return fixed_point(m.raw, 5); }
inline std::string volume_str(Volume v) { return fixed_point(v.raw, 3); }

inline std::string alerts_str(const KpiReport& k) {
  std::string s;
  for (int i = 0; i < monitor::kAlertKinds; ++i) {
    if (i) s += ';';
    s += std::string(monitor::to_string(static_cast<monitor::AlertKind>(i))) + ":" +
         std::to_string(k.alerts_by_kind[static_cast<std::size_t>(i)]);
  }
  return s;
}

inline constexpr const char* kKpiCsvHeader =
    "first_hour,end_hour,total_margin,gallons_sold,stockout_customers,holding_cost_total,forecast_mse,alerts_by_kind,"
    "attach_rate,mean_checkout_seconds,fueling_visits,revenue";

inline std::string kpi_csv_row(const KpiReport& k) {
  char tail[160];
  std::snprintf(tail, sizeof tail, "%.6f", k.forecast_mse());
  std::string row = std::to_string(k.first_hour) + "," + std::to_string(k.end_hour) + "," + money_str(k.total_margin) +
                    "," + volume_str(k.gallons_sold) + "," + std::to_string(k.stockout_customers) + "," +
                    money_str(k.holding_cost_total) + "," + tail + "," + alerts_str(k) + ",";
  std::snprintf(tail, sizeof tail, "%.6f,%.3f", k.attach_rate(), k.mean_checkout_seconds());
  row += tail;
  row += "," + std::to_string(k.fueling_visits) + "," + money_str(k.revenue);
  return row;
}

inline void write_kpi_csv(std::ostream& os, const std::vector<KpiReport>& rows) {
  os << kKpiCsvHeader << '\n';
  for (const auto& r : rows) os << kpi_csv_row(r) << '\n';
}

inline void write_kpi_table(std::ostream& os, const std::vector<KpiReport>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%5s %14s %12s %8s %11s %10s %7s %8s %7s %6s\n", "day", "margin$", "gallons",
                "stockout", "holding$", "fcst_mse", "alerts", "attach", "chk_s", "visits");
  os << line;
  KpiReport total;
  bool first = true;
  for (const auto& r : rows) {
    std::int64_t alerts = 0;
    for (auto a : r.alerts_by_kind) alerts += a;
    std::snprintf(line, sizeof line, "%5lld %14.2f %12.1f %8lld %11.2f %10.1f %7lld %8.3f %7.1f %6lld\n",
                  static_cast<long long>(r.first_hour / sim::kHoursPerDay), to_dollars(r.total_margin), to_gallons(r.gallons_sold),
                  static_cast<long long>(r.stockout_customers), to_dollars(r.holding_cost_total), r.forecast_mse(),
                  static_cast<long long>(alerts), r.attach_rate(), r.mean_checkout_seconds(),
                  static_cast<long long>(r.fueling_visits));
    os << line;
    if (first) {
      total = r;
      first = false;
    } else {
      total += r;
    }
  }
  if (!rows.empty()) {
    std::int64_t alerts = 0;
    for (auto a : total.alerts_by_kind) alerts += a;
    std::snprintf(line, sizeof line, "%5s %14.2f %12.1f %8lld %11.2f %10.1f %7lld %8.3f %7.1f %6lld\n", "total",
                  to_dollars(total.total_margin), to_gallons(total.gallons_sold),
                  static_cast<long long>(total.stockout_customers), to_dollars(total.holding_cost_total),
                  total.forecast_mse(), static_cast<long long>(alerts), total.attach_rate(),
                  total.mean_checkout_seconds(), static_cast<long long>(total.fueling_visits));
    os << line;
  }
}

}  // namespace fuelsim::ops

#endif  // FUELSIM_OPS_KPI_HPP
