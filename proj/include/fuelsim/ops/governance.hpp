#ifndef FUELSIM_OPS_GOVERNANCE_HPP
#define FUELSIM_OPS_GOVERNANCE_HPP

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/forecast/arx.hpp"
#include "fuelsim/monitor/fft.hpp"
#include "fuelsim/monitor/fraud.hpp"
#include "fuelsim/monitor/leak.hpp"
#include "fuelsim/monitor/vehicle.hpp"
#include "fuelsim/ops/inventory.hpp"
#include "fuelsim/ops/kpi.hpp"
#include "fuelsim/ops/maintenance.hpp"
#include "fuelsim/pricing/qlearning.hpp"
#include "fuelsim/sim/episode.hpp"

namespace fuelsim::ops {

struct ForecasterParams {
  int n_lags = 24;
  double ridge_lambda = 1e-3;
  int window_days = 28;     // trailing training window
  int min_train_days = 7;   // no fit before this much history
};

struct MonitorParams {
  double cusum_k = 0.5;
  double cusum_h = 5.0;
  int leak_calibration_hours = 48;
  double band_ratio = monitor::kDefaultBandRatio;
  double band_half_width_hz = 5.0;
  int vibration_baseline_days = 3;
  int battery_window_days = 5;
  std::int64_t auth_window_sec = monitor::kDefaultAuthWindowSec;
};

struct GovernanceParams {
  InventoryParams inventory{};
  ForecasterParams forecaster{};
  MonitorParams monitor{};
  bool monitors_enabled = true;
  std::vector<int> service_slot_hours{9, 14};  // hours of day offered the day after an alert
};

inline void validate(const ForecasterParams& p) {
  if (p.n_lags < 1) throw ConfigError("n_lags", "must be >= 1");
  if (!(p.ridge_lambda >= 0.0)) throw ConfigError("ridge_lambda", "must be >= 0");
  if (p.window_days < 2) throw ConfigError("window_days", "must be >= 2");
  if (p.min_train_days < 2 || p.min_train_days > p.window_days)
    throw ConfigError("min_train_days", "must be in [2, window_days]");
}

inline void validate(const MonitorParams& p) {
  if (!(p.cusum_k >= 0.0)) throw ConfigError("cusum_k", "must be >= 0");
  if (!(p.cusum_h > 0.0)) throw ConfigError("cusum_h", "must be > 0");
  if (p.leak_calibration_hours < 2) throw ConfigError("leak_calibration_hours", "must be >= 2");
  if (!(p.band_ratio > 0.0)) throw ConfigError("band_ratio", "must be > 0");
  if (!(p.band_half_width_hz > 0.0)) throw ConfigError("band_half_width_hz", "must be > 0");
  if (p.vibration_baseline_days < 1) throw ConfigError("vibration_baseline_days", "must be >= 1");
  if (p.battery_window_days < 1) throw ConfigError("battery_window_days", "must be >= 1");
  if (p.auth_window_sec < 0) throw ConfigError("auth_window_sec", "must be >= 0");
}

inline std::string dispenser_asset(int d) { return "dispenser-" + std::to_string(d); }
inline std::string vehicle_asset(int v) { return "vehicle-" + std::to_string(v); }
inline std::string tire_asset(int v, int t) { return "vehicle-" + std::to_string(v) + "-tire-" + std::to_string(t); }

/// What one governance tick produced, in emission order.
struct DayOutcome {
  std::int64_t day = 0;
  std::vector<monitor::Alert> alerts;
  std::vector<Booking> bookings;  // alert_index refers to the scheduler's input queue
  KpiReport kpi;
};

/// Receives everything the run produces, for recording.
class GovernanceListener {
 public:
  virtual ~GovernanceListener() = default;
  virtual void on_hour(const sim::HourRecord&, std::span<const sim::CustomerVisit>) {}
  virtual void on_order(const sim::OrderEvent&) {}
  virtual void on_day(const sim::DaySensors&, const DayOutcome&) {}
};

/// Daily orchestration loop. Stage order within a tick is fixed: forecaster
/// refit, inventory decision, pricing snapshot refresh, monitors, service
/// scheduling, KPI row.
class Governance final : public sim::EpisodeObserver {
 public:
  Governance(GovernanceParams params, const sim::StationParams& station)
      : p_(std::move(params)),
        station_(station),
        forecaster_(static_cast<std::size_t>(p_.forecaster.n_lags), p_.forecaster.ridge_lambda),
        leak_("tank-0", p_.monitor.cusum_k, p_.monitor.cusum_h, p_.monitor.leak_calibration_hours) {
    validate(p_.inventory, station.tank_capacity);
    validate(p_.forecaster);
    validate(p_.monitor);
    if (p_.inventory.lead_time != station.delivery_lead_time)
      throw ConfigError("lead_time", "must equal the station delivery_lead_time");
    kpi_params_.holding_mc_per_gal_day = dollars(p_.inventory.holding_cost).raw;
  }

  /// Greedy pricing policy whose snapshot is refreshed from `source` every tick.
  void attach_pricing(pricing::GreedyPolicy* policy, const pricing::QTable* source) {
    pricing_ = policy;
    pricing_source_ = source;
  }
  void attach_listener(GovernanceListener* l) { listener_ = l; }

  // ---- EpisodeObserver ----

  std::optional<Volume> forecast_hour(const sim::PricingContext& ctx, const sim::EpisodeLog&) override {
    if (!forecaster_.ready() || sales_.size() < forecaster_.n_lags()) return std::nullopt;
    return gallons(forecaster_.predict(sales_, ctx.exo));
  }

  void on_hour(const sim::HourRecord& rec, std::span<const sim::CustomerVisit> visits) override {
    sales_.push_back(to_gallons(rec.gallons_sold));
    exo_.push_back(rec.exo);
    if (listener_) listener_->on_hour(rec, visits);
  }

  void on_order(const sim::OrderEvent& e) override {
    if (e.kind == sim::OrderEventKind::placed) pending_ = e.quantity;
    else pending_ = Volume{};
    if (listener_) listener_->on_order(e);
  }

  void on_day_end(std::int64_t day, const sim::DaySensors& sensors, sim::EpisodeLog& log) override {
    tick(day, sensors, log);
  }

  // ---- tick ----

  void tick(std::int64_t day, const sim::DaySensors& sensors, sim::EpisodeLog& log) {
    if (log.hours.size() != static_cast<std::size_t>((day + 1) * sim::kHoursPerDay))
      throw ModuleError("ops-governance", "tick at a non-boundary hour");
    DayOutcome out;
    out.day = day;

    guarded("forecast", [&] { refit_forecaster(); });
    guarded("ops-governance", [&] {
      decision_time_ = (day + 1) * sim::kHoursPerDay;
      decision_ = decide(log.hours.back().tank_level, pending_, decision_time_);
    });
    guarded("pricing", [&] {
      if (pricing_ && pricing_source_) pricing_->refresh(*pricing_source_);
    });
    if (p_.monitors_enabled) guarded("monitor", [&] { run_monitors(day, sensors, log, out.alerts); });
    for (const auto& a : out.alerts) ++log.hours.at(static_cast<std::size_t>(a.timestamp)).alerts;
    guarded("ops-governance", [&] { out.bookings = schedule(day, out.alerts); });
    guarded("ops-governance", [&] {
      out.kpi = emit_kpi_report(log, day_period(day, day), out.alerts, kpi_params_);
    });

    alerts_.insert(alerts_.end(), out.alerts.begin(), out.alerts.end());
    kpi_rows_.push_back(out.kpi);
    if (listener_) listener_->on_day(sensors, out);
  }

  /// Inventory decision for boundary `time`. The tick precomputes the answer for
  /// its own boundary; time 0 is decided on demand.
  std::optional<Volume> decide(Volume level, Volume pending, std::int64_t time) const {
    const DemandHistory h{sales_, exo_};
    DemandOutlook o;
    if (p_.inventory.kind == PolicyKind::forecast_driven)
      o = lead_time_outlook(forecaster_, h, p_.inventory.lead_time + p_.inventory.review_interval,
                            forecaster_.n_lags());
    return inventory_decision(level, pending, p_.inventory, o, time);
  }

  std::optional<Volume> decision_for(const sim::InventoryView& v) const {
    if (decision_time_ == v.time) return decision_;
    return decide(v.level, v.pending, v.time);
  }

  const std::vector<monitor::Alert>& alerts() const { return alerts_; }
  const std::vector<KpiReport>& kpi_rows() const { return kpi_rows_; }
  const std::vector<Booking>& bookings() const { return bookings_; }
  const std::vector<MaintenanceSlot>& slots() const { return slots_; }
  const forecast::ArxForecaster& forecaster() const { return forecaster_; }
  const KpiParams& kpi_params() const { return kpi_params_; }
  const GovernanceParams& params() const { return p_; }

 private:
  template <typename Fn>
  static void guarded(const char* module, Fn&& fn) {
    try {
      fn();
    } catch (const ModuleError&) {
      throw;
    } catch (const std::exception& e) {
      throw ModuleError(module, e.what());
    }
  }

  void refit_forecaster() {
    const std::size_t lags = static_cast<std::size_t>(p_.forecaster.n_lags);
    const std::size_t min_rows = static_cast<std::size_t>(p_.forecaster.min_train_days * sim::kHoursPerDay);
    if (sales_.size() < min_rows + lags) return;
    const std::size_t want = static_cast<std::size_t>(p_.forecaster.window_days * sim::kHoursPerDay) + lags;
    const std::size_t n = std::min(want, sales_.size());
    const std::size_t first = sales_.size() - n;
    forecaster_.fit(std::span<const double>(sales_).subspan(first, n),
                    std::span<const sim::ExogenousState>(exo_).subspan(first, n));
  }

  void run_monitors(std::int64_t day, const sim::DaySensors& sensors, const sim::EpisodeLog& log,
                    std::vector<monitor::Alert>& out) {
    const std::int64_t h0 = day * sim::kHoursPerDay;
    const std::int64_t h1 = h0 + sim::kHoursPerDay;

    // Tank mass balance, hourly.
    for (std::int64_t h = h0; h < h1; ++h) {
      const sim::HourRecord& r = log.hours[static_cast<std::size_t>(h)];
      if (h == 0) leak_.push({-1, gauge_start(log), 0, Volume{}, Volume{}});
      if (auto a = leak_.push({h, r.gauge_level, r.tank_temp_cdeg, r.gallons_sold, r.delivered})) out.push_back(*a);
    }

    // Vibration: early frames form each dispenser's baseline; later frames are scored against it.
    for (const sim::VibrationFrame& f : sensors.frames) {
      const monitor::Spectrum s = monitor::dft(f.signal(), f.sample_rate);
      auto& st = vibration_[f.dispenser];
      if (day < p_.monitor.vibration_baseline_days) {
        st.calibration.push_back(s);
        if (static_cast<int>(st.calibration.size()) == p_.monitor.vibration_baseline_days)
          st.baseline = monitor::average_spectrum(st.calibration);
        continue;
      }
      if (!st.baseline || st.latched) continue;
      const monitor::BinRange band = monitor::band_around(station_.sensors.fault_tone_hz, p_.monitor.band_half_width_hz,
                                                          s.n, s.sample_rate);
      if (auto a = monitor::spectral_fault(s, *st.baseline, band, p_.monitor.band_ratio, dispenser_asset(f.dispenser),
                                           f.hour)) {
        st.latched = true;
        out.push_back(*a);
      }
    }

    // Fleet vehicles: battery residuals over a rolling window, tire bands per reading.
    const std::size_t window = static_cast<std::size_t>(p_.monitor.battery_window_days * sim::kHoursPerDay);
    for (const sim::VehicleReading& r : sensors.vehicles) {
      auto& st = vehicles_[r.vehicle];
      for (std::int64_t mv : r.volts_mv) st.volts.push_back(static_cast<double>(mv) / 1000.0);
      while (st.volts.size() > window) st.volts.pop_front();
      if (st.volts.size() == window) {
        const std::vector<double> v(st.volts.begin(), st.volts.end());
        const std::int64_t first_hour = r.hour + static_cast<std::int64_t>(r.volts_mv.size()) -
                                        static_cast<std::int64_t>(window);
        if (auto a = monitor::battery_anomaly(v, vehicle_asset(r.vehicle), first_hour)) {
          if (a->timestamp >= r.hour && a->timestamp > st.last_battery_alert) {
            st.last_battery_alert = a->timestamp;
            out.push_back(*a);
          }
        }
      }
      const std::int64_t reading_hour = r.hour + sim::kHoursPerDay - 1;
      for (std::size_t t = 0; t < r.tire_cpsi.size(); ++t) {
        const auto a = monitor::tire_check(static_cast<double>(r.tire_cpsi[t]) / 100.0,
                                           tire_asset(r.vehicle, static_cast<int>(t)), reading_hour);
        const int level = !a ? 0 : (a->severity == monitor::Severity::urgent ? 2 : 1);
        int& prev = st.tire_level[t];
        if (level > prev) out.push_back(*a);
        prev = level;
      }
    }

    // Dispenser flow without a recent authorization on the same dispenser.
    std::vector<monitor::DispenserEvent> flows;
    std::vector<monitor::DispenserEvent> auths(carry_auths_.begin(), carry_auths_.end());
    auto it = std::lower_bound(log.visits.begin(), log.visits.end(), h0,
                               [](const sim::CustomerVisit& v, std::int64_t h) { return v.hour < h; });
    for (; it != log.visits.end() && it->hour < h1; ++it) {
      if (it->flow_sec >= 0) flows.push_back({it->dispenser, it->flow_sec});
      if (it->auth_sec >= 0) auths.push_back({it->dispenser, it->auth_sec});
    }
    auto by_time = [](const monitor::DispenserEvent& a, const monitor::DispenserEvent& b) { return a.sec < b.sec; };
    std::stable_sort(flows.begin(), flows.end(), by_time);
    std::stable_sort(auths.begin(), auths.end(), by_time);
    for (auto& a : monitor::dispenser_fraud(flows, auths, p_.monitor.auth_window_sec)) out.push_back(std::move(a));
    carry_auths_.clear();
    const std::int64_t keep_from = h1 * sim::kSecondsPerHour - p_.monitor.auth_window_sec;
    for (const auto& a : auths)
      if (a.sec >= keep_from) carry_auths_.push_back(a);
  }

  static Volume gauge_start(const sim::EpisodeLog& log) {
    // Before hour 0 the gauge is taken as the book level; its noise enters through the first reading.
    return log.initial_tank;
  }

  std::vector<Booking> schedule(std::int64_t day, const std::vector<monitor::Alert>& fresh) {
    queue_.insert(queue_.end(), fresh.begin(), fresh.end());
    if (queue_.empty()) return {};
    const std::int64_t next_day = (day + 1) * sim::kHoursPerDay;
    std::vector<MaintenanceSlot> open;
    for (int hod : p_.service_slot_hours) open.push_back({next_slot_id_++, next_day + hod, std::nullopt, false, Money{}});
    std::vector<Booking> made = schedule_service(queue_, open);
    std::vector<bool> taken(queue_.size(), false);
    for (const Booking& b : made) taken[b.alert_index] = true;
    std::vector<monitor::Alert> rest;
    for (std::size_t i = 0; i < queue_.size(); ++i)
      if (!taken[i]) rest.push_back(queue_[i]);
    // Slots are offered only for the next day; unused ones lapse.
    for (auto& s : open)
      if (s.booked) slots_.push_back(s);
    bookings_.insert(bookings_.end(), made.begin(), made.end());
    queue_ = std::move(rest);
    return made;
  }

  struct VibrationState {
    std::vector<monitor::Spectrum> calibration;
    std::optional<monitor::Spectrum> baseline;
    bool latched = false;
  };
  struct VehicleState {
    std::deque<double> volts;
    std::int64_t last_battery_alert = -1;
    std::map<std::size_t, int> tire_level;
  };

  GovernanceParams p_;
  sim::StationParams station_;
  forecast::ArxForecaster forecaster_;
  KpiParams kpi_params_{};
  pricing::GreedyPolicy* pricing_ = nullptr;
  const pricing::QTable* pricing_source_ = nullptr;
  GovernanceListener* listener_ = nullptr;

  std::vector<double> sales_;
  std::vector<sim::ExogenousState> exo_;
  Volume pending_{};
  std::int64_t decision_time_ = -1;
  std::optional<Volume> decision_;

  monitor::LeakDetector leak_;
  std::map<int, VibrationState> vibration_;
  std::map<int, VehicleState> vehicles_;
  std::vector<monitor::DispenserEvent> carry_auths_;

  std::vector<monitor::Alert> queue_;
  std::int64_t next_slot_id_ = 1;
  std::vector<MaintenanceSlot> slots_;
  std::vector<Booking> bookings_;
  std::vector<monitor::Alert> alerts_;
  std::vector<KpiReport> kpi_rows_;
};

/// Inventory policy that defers to a governance loop's decision.
class GovernedInventory final : public sim::InventoryPolicy {
 public:
  explicit GovernedInventory(const Governance& g) : g_(&g) {}
  std::optional<Volume> decide(const sim::InventoryView& v) override { return g_->decision_for(v); }

 private:
  const Governance* g_;
};

struct GovernedRun {
  sim::EpisodeLog log;
  std::vector<KpiReport> kpi_rows;
  std::vector<monitor::Alert> alerts;
  std::vector<Booking> bookings;
};

/// Full governed run: the governance loop decides inventory and observes everything.
inline GovernedRun run_governed(const sim::SimConfig& config, const GovernanceParams& params,
                                sim::PricingPolicy& pricing, std::int64_t horizon_hours,
                                GovernanceListener* listener = nullptr, pricing::GreedyPolicy* greedy = nullptr,
                                const pricing::QTable* table = nullptr) {
  Governance g(params, config.station);
  g.attach_listener(listener);
  g.attach_pricing(greedy, table);
  GovernedInventory inv(g);
  GovernedRun r;
  r.log = sim::run_episode(config, pricing, inv, horizon_hours, &g);
  r.kpi_rows = g.kpi_rows();
  r.alerts = g.alerts();
  r.bookings = g.bookings();
  return r;
}

}  // namespace fuelsim::ops

#endif  // FUELSIM_OPS_GOVERNANCE_HPP
