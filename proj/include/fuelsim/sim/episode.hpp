#ifndef FUELSIM_SIM_EPISODE_HPP
#define FUELSIM_SIM_EPISODE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/sim/catalog.hpp"
#include "fuelsim/sim/exogenous.hpp"
#include "fuelsim/sim/faults.hpp"
#include "fuelsim/sim/world.hpp"

namespace fuelsim::sim {

struct SimConfig {
  std::uint64_t seed = 42;
  std::uint64_t config_digest = 0;
  StationParams station{};
  std::vector<FaultInjection> faults;
};

enum class OrderEventKind { placed, delivered };

struct OrderEvent {
  OrderEventKind kind = OrderEventKind::placed;
  std::int64_t order_id = 0;
  std::int64_t time = 0;  // hour boundary: placed at the end of hour time-1, delivered at the start of hour time
  Volume quantity{};
  std::int64_t arrival = 0;
  bool operator==(const OrderEvent&) const = default;
};

struct EpisodeLog {
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  Volume initial_tank{};
  std::vector<HourRecord> hours;
  std::vector<CustomerVisit> visits;
  std::vector<OrderEvent> orders;

  Volume total_delivered() const {
    Volume v{};
    for (const auto& h : hours) v += h.delivered;
    return v;
  }
  Volume total_sold() const {
    Volume v{};
    for (const auto& h : hours) v += h.gallons_sold;
    return v;
  }
  Volume total_leaked() const {
    Volume v{};
    for (const auto& h : hours) v += h.leaked;
    return v;
  }
  Volume final_tank() const { return hours.empty() ? initial_tank : hours.back().tank_level; }

  bool operator==(const EpisodeLog&) const = default;
};

/// deliveries - sales - leaks == final - initial, in exact mgal.
inline bool tank_balance_holds(const EpisodeLog& log) {
  return log.total_delivered() - log.total_sold() - log.total_leaked() == log.final_tank() - log.initial_tank;
}

struct PricingContext {
  std::int64_t hour = 0;
  const ExogenousState& exo;
  Price previous_price;
  double demand_at_previous = 0.0;
  const StationParams& params;
};

class PricingPolicy {
 public:
  virtual ~PricingPolicy() = default;
  virtual Price post(const PricingContext& ctx) = 0;
  /// Outcome of the hour priced by the last `post` call.
  virtual void observe(const HourRecord&, double /*retention_delta*/) {}
};

struct InventoryView {
  std::int64_t time = 0;  // hour boundary at which the decision is taken
  Volume level{};
  Volume pending{};
  Volume capacity{};
  int lead_time = 1;
  const EpisodeLog& log;
};

class InventoryPolicy {
 public:
  virtual ~InventoryPolicy() = default;
  /// Called at every day boundary, including time 0. Returns a quantity to order.
  virtual std::optional<Volume> decide(const InventoryView& view) = 0;
};

/// Hooks for components that watch the run (forecasting, monitoring, telemetry).
class EpisodeObserver {
 public:
  virtual ~EpisodeObserver() = default;
  virtual std::optional<Volume> forecast_hour(const PricingContext&, const EpisodeLog&) { return std::nullopt; }
  virtual void on_hour(const HourRecord&, std::span<const CustomerVisit>) {}
  virtual void on_order(const OrderEvent&) {}
  /// Runs after the last hour of each day, before the inventory review at that boundary.
  virtual void on_day_end(std::int64_t /*day*/, const DaySensors&, EpisodeLog&) {}
};

/// Never orders. Useful for tests that need a closed tank.
class NoReorder final : public InventoryPolicy {
 public:
  std::optional<Volume> decide(const InventoryView&) override { return std::nullopt; }
};

/// Competitor-parity pricing; the simulator's neutral default.
class MatchCompetitor final : public PricingPolicy {
 public:
  Price post(const PricingContext& ctx) override { return ctx.exo.competitor_cents(); }
};

/// Hour-by-hour run of the station. The result depends only on (config, policies, horizon).
inline EpisodeLog run_episode(const SimConfig& config, PricingPolicy& pricing, InventoryPolicy& inventory,
                              std::int64_t horizon_hours, EpisodeObserver* observer = nullptr) {
  if (horizon_hours < kHoursPerDay) throw ConfigError("horizon_hours", "must be >= 24");
  const StationParams& p = config.station;
  validate(p);

  WorldState world = initial_world(p, config.seed);
  const CustomerPopulation population(p.repeat_users, Rng64{config.seed}.fork(4));
  const Volume capacity = gallons(p.tank_capacity);

  EpisodeLog log;
  log.config_digest = config.config_digest;
  log.seed = config.seed;
  log.initial_tank = world.tank;
  log.hours.reserve(static_cast<std::size_t>(horizon_hours));

  std::optional<OrderEvent> outstanding;
  std::int64_t next_order_id = 1;
  Price previous_price = world.exo.competitor_cents();

  auto review = [&](std::int64_t time) {
    const InventoryView view{time, world.tank, outstanding ? outstanding->quantity : Volume{}, capacity,
                             p.delivery_lead_time, log};
    const std::optional<Volume> qty = inventory.decide(view);
    if (outstanding || !qty || qty->raw <= 0) return;
    OrderEvent placed{OrderEventKind::placed, next_order_id++, time, *qty, time + p.delivery_lead_time};
    outstanding = placed;
    log.orders.push_back(placed);
    if (observer) observer->on_order(placed);
  };

  review(0);
  for (std::int64_t h = 0; h < horizon_hours; ++h) {
    auto [exo, rng] = step_exogenous(world.exo, p, world.rng);
    world.exo = exo;
    world.rng = rng;
    world.hour = h;

    Volume delivered{};
    if (outstanding && outstanding->arrival == h) {
      delivered = std::min(outstanding->quantity, capacity - world.tank);
      world.tank += delivered;
      OrderEvent done{OrderEventKind::delivered, outstanding->order_id, h, delivered, h};
      log.orders.push_back(done);
      if (observer) observer->on_order(done);
      outstanding.reset();
    }

    const PricingContext ctx{h, world.exo, previous_price, demand_rate(previous_price, world.exo, p), p};
    Price posted = pricing.post(ctx);
    bool clamped = false;
    if (posted < world.exo.wholesale_cents()) {
      posted = world.exo.wholesale_cents();
      clamped = true;
    }
    std::optional<Volume> forecast;
    if (observer) forecast = observer->forecast_hour(ctx, log);

    HourOutcome outcome = simulate_hour(world, posted, p, population, config.faults);
    outcome.record.delivered = delivered;
    outcome.record.price_clamped = clamped;
    outcome.record.forecast = forecast;
    pricing.observe(outcome.record, outcome.retention_delta);
    if (observer) observer->on_hour(outcome.record, outcome.visits);

    log.hours.push_back(outcome.record);
    log.visits.insert(log.visits.end(), std::make_move_iterator(outcome.visits.begin()),
                      std::make_move_iterator(outcome.visits.end()));
    previous_price = posted;

    if ((h + 1) % kHoursPerDay == 0) {
      const std::int64_t day_start = h + 1 - kHoursPerDay;
      const DaySensors sensors = sense_day(world, p, config.faults, day_start);
      if (observer) observer->on_day_end(day_start / kHoursPerDay, sensors, log);
      review(h + 1);
    }
  }
  return log;
}

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_EPISODE_HPP
