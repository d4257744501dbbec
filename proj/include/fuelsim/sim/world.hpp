#ifndef FUELSIM_SIM_WORLD_HPP
#define FUELSIM_SIM_WORLD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "fuelsim/core/rng.hpp"
#include "fuelsim/core/units.hpp"
#include "fuelsim/sim/catalog.hpp"
#include "fuelsim/sim/demand.hpp"
#include "fuelsim/sim/faults.hpp"
#include "fuelsim/sim/params.hpp"

namespace fuelsim::sim {

enum class VisitKind { fuel, shop_only, turned_away, unauthorized };

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kMsPerHour = kSecondsPerHour * 1000;

struct CustomerVisit {
  std::int64_t hour = 0;
  std::int64_t offset_ms = 0;  // arrival within the hour
  VisitKind kind = VisitKind::fuel;
  std::int64_t user_id = -1;  // repeat customers are [0, repeat_users); -1 for unauthorized draws
  Volume gallons{};
  Price price_paid{};
  std::vector<int> basket;
  std::int64_t checkout_ms = 0;
  int dispenser = -1;
  std::int64_t auth_sec = -1;  // absolute second of pump authorization; -1 when none
  std::int64_t flow_sec = -1;  // absolute second the dispenser started flowing

  bool fueled() const { return kind == VisitKind::fuel || kind == VisitKind::unauthorized; }
  Money revenue() const { return gallons * price_paid; }
  bool operator==(const CustomerVisit&) const = default;
};

struct HourRecord {
  std::int64_t hour = 0;
  ExogenousState exo{};
  Price posted_price{};
  bool price_clamped = false;
  Volume gallons_sold{};
  Money revenue{};
  std::int64_t visits = 0;  // visit records emitted this hour, every kind
  std::int64_t fueling_visits = 0;
  std::int64_t turned_away = 0;
  Volume tank_level{};  // book level at the end of the hour
  Volume delivered{};
  Volume leaked{};
  std::optional<Volume> forecast;  // one-step gallons prediction made before the hour
  std::int64_t alerts = 0;
  // tank gauge sensor, end of hour
  Volume gauge_level{};
  std::int64_t tank_temp_cdeg = 0;

  Money margin() const { return revenue - gallons_sold * exo.wholesale_cents(); }
  bool operator==(const HourRecord&) const = default;
};

struct VibrationFrame {
  int dispenser = 0;
  std::int64_t hour = 0;
  double sample_rate = 1000.0;
  double counts_per_unit = 2048.0;
  std::vector<std::int16_t> samples;

  std::vector<double> signal() const {
    std::vector<double> x(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) x[i] = samples[i] / counts_per_unit;
    return x;
  }
};

struct VehicleReading {
  int vehicle = 0;
  std::int64_t hour = 0;  // hour of the first voltage sample
  std::vector<std::int64_t> volts_mv;  // one sample per hour of the day
  std::vector<std::int64_t> tire_cpsi;  // four tires, centi-psi
};

struct DaySensors {
  std::int64_t day = 0;
  std::vector<VibrationFrame> frames;
  std::vector<VehicleReading> vehicles;
};

/// Mutable physical state of the station between hours.
struct WorldState {
  std::int64_t hour = 0;
  ExogenousState exo{};
  Volume tank{};
  double smoothed_gap = 0.0;
  std::int64_t next_anonymous_id = 0;
  Rng64 rng{};
  Rng64 sensor_rng{};
  Rng64 fault_rng{};
  std::vector<double> battery_state;            // per vehicle deviation from nominal
  std::vector<std::array<double, 4>> tire_psi;  // per vehicle
};

inline constexpr std::int64_t kAnonymousIdBase = 1'000'000;

inline WorldState initial_world(const StationParams& p, std::uint64_t seed) {
  WorldState w;
  w.exo = initial_exogenous(p);
  w.tank = gallons(p.initial_tank_level);
  w.next_anonymous_id = kAnonymousIdBase;
  const Rng64 root{seed};
  w.rng = root.fork(1);
  w.sensor_rng = root.fork(2);
  w.fault_rng = root.fork(3);
  w.battery_state.assign(static_cast<std::size_t>(p.sensors.fleet_vehicles), 0.0);
  w.tire_psi.assign(static_cast<std::size_t>(p.sensors.fleet_vehicles),
                    {p.sensors.tire_nominal_psi, p.sensors.tire_nominal_psi, p.sensors.tire_nominal_psi,
                     p.sensors.tire_nominal_psi});
  return w;
}

inline double checkout_seconds(const StationParams& p, Rng64& rng) {
  if (p.checkout_mode == CheckoutMode::smart && rng.bernoulli(p.recognition_success_prob))
    return rng.exponential(p.smart_checkout_mean);
  return rng.exponential(p.manual_checkout_mean);
}

struct HourOutcome {
  HourRecord record;
  std::vector<CustomerVisit> visits;
  double retention_delta = 0.0;
};

/// Simulates one hour of forecourt and shop traffic at `posted`.
///
/// `world.exo` must already describe this hour. Volumes leave the tank in arrival
/// order; once it is empty further fueling arrivals are turned away. An active
/// leak removes its share of whatever remains at the end of the hour.
inline HourOutcome simulate_hour(WorldState& world, Price posted, const StationParams& p,
                                 const CustomerPopulation& population, const std::vector<FaultInjection>& faults) {
  HourOutcome out;
  HourRecord& rec = out.record;
  rec.hour = world.hour;
  rec.exo = world.exo;
  rec.posted_price = posted;

  Rng64& rng = world.rng;
  const double rate = demand_rate(posted, world.exo, p);
  const std::int64_t fueling = rng.poisson(rate);
  const std::int64_t walk_ins = rng.poisson(p.shop_only_rate * p.daypart_multipliers[world.exo.hour_of_day]);

  struct Arrival {
    std::int64_t offset_ms;
    bool fuel;
  };
  std::vector<Arrival> arrivals;
  arrivals.reserve(static_cast<std::size_t>(fueling + walk_ins));
  for (std::int64_t i = 0; i < fueling; ++i)
    arrivals.push_back({static_cast<std::int64_t>(rng.below(kMsPerHour)), true});
  for (std::int64_t i = 0; i < walk_ins; ++i)
    arrivals.push_back({static_cast<std::int64_t>(rng.below(kMsPerHour)), false});
  std::stable_sort(arrivals.begin(), arrivals.end(),
                   [](const Arrival& a, const Arrival& b) { return a.offset_ms < b.offset_ms; });

  const double repeat_p = repeat_probability(world.smoothed_gap, p);
  const std::int64_t hour_start_sec = world.hour * kSecondsPerHour;
  const Volume min_fill = gallons(0.1);

  auto pick_user = [&]() -> std::int64_t {
    if (rng.bernoulli(repeat_p)) return static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(p.repeat_users)));
    return world.next_anonymous_id++;
  };

  for (const Arrival& a : arrivals) {
    CustomerVisit v;
    v.hour = world.hour;
    v.offset_ms = a.offset_ms;
    v.user_id = pick_user();
    if (a.fuel) {
      const Volume want = std::max(min_fill, gallons(std::max(0.0, rng.gaussian(p.gallons_mean, p.gallons_sd))));
      if (world.tank.raw <= 0) {
        v.kind = VisitKind::turned_away;
        ++rec.turned_away;
        out.visits.push_back(std::move(v));
        continue;
      }
      v.kind = VisitKind::fuel;
      v.gallons = std::min(want, world.tank);
      v.price_paid = posted;
      world.tank -= v.gallons;
      v.dispenser = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.sensors.dispensers)));
      v.auth_sec = hour_start_sec + a.offset_ms / 1000;
      v.flow_sec = v.auth_sec + 5 + static_cast<std::int64_t>(rng.below(60));
      if (rng.bernoulli(p.shop_attach_prob)) v.basket = population.sample_basket(static_cast<int>(v.user_id), rng);
      ++rec.fueling_visits;
    } else {
      v.kind = VisitKind::shop_only;
      v.basket = population.sample_basket(static_cast<int>(v.user_id), rng);
    }
    v.checkout_ms = std::llround(checkout_seconds(p, rng) * 1000.0);
    out.visits.push_back(std::move(v));
  }

  // Unauthorized dispenses draw from a separate stream so clean runs are unaffected by them.
  const double fraud_rate = active_magnitude(faults, FaultKind::fraud, world.hour);
  if (fraud_rate > 0.0) {
    Rng64& frng = world.fault_rng;
    const std::int64_t n = frng.poisson(fraud_rate);
    for (std::int64_t i = 0; i < n && world.tank.raw > 0; ++i) {
      CustomerVisit v;
      v.hour = world.hour;
      v.offset_ms = static_cast<std::int64_t>(frng.below(kMsPerHour));
      v.kind = VisitKind::unauthorized;
      v.gallons = std::min(world.tank, std::max(min_fill, gallons(std::max(0.0, frng.gaussian(p.gallons_mean, p.gallons_sd)))));
      v.price_paid = Price{0};
      world.tank -= v.gallons;
      v.dispenser = static_cast<int>(frng.below(static_cast<std::uint64_t>(p.sensors.dispensers)));
      v.flow_sec = hour_start_sec + v.offset_ms / 1000;
      out.visits.push_back(std::move(v));
    }
  }

  for (const CustomerVisit& v : out.visits) {
    rec.gallons_sold += v.gallons;
    rec.revenue += v.revenue();
  }
  rec.visits = static_cast<std::int64_t>(out.visits.size());

  const double leak_fraction = active_magnitude(faults, FaultKind::leak, world.hour);
  if (leak_fraction > 0.0) {
    rec.leaked = Volume{static_cast<std::int64_t>(std::floor(static_cast<double>(world.tank.raw) * leak_fraction))};
    world.tank -= rec.leaked;
  }
  rec.tank_level = world.tank;

  const double gap = price_gap(posted, world.exo);
  world.smoothed_gap = (1.0 - p.retention_smoothing) * world.smoothed_gap + p.retention_smoothing * gap;
  out.retention_delta = repeat_probability(world.smoothed_gap, p) - repeat_p;

  // Tank gauge: true level plus probe noise, clamped to the physical range.
  const Volume capacity = gallons(p.tank_capacity);
  const Volume noisy = world.tank + gallons(world.sensor_rng.gaussian(0.0, p.sensors.gauge_noise_sd));
  rec.gauge_level = std::clamp(noisy, Volume{0}, capacity);
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(world.exo.hour_of_day - 9) / kHoursPerDay;
  const double temp =
      p.sensors.tank_temp_mean + p.sensors.tank_temp_swing * std::sin(phase) + 0.05 * world.sensor_rng.gaussian();
  rec.tank_temp_cdeg = std::llround(temp * 100.0);
  return out;
}

inline std::vector<std::int16_t> quantize_frame(const std::vector<double>& x, double counts_per_unit) {
  std::vector<std::int16_t> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    q[i] = static_cast<std::int16_t>(std::clamp(std::lround(x[i] * counts_per_unit), -32768L, 32767L));
  return q;
}

/// One vibration frame: three fixed machine tones plus white noise, with an extra
/// tone at the fault frequency when `fault_amplitude_ratio` > 0.
inline VibrationFrame make_vibration_frame(int dispenser, std::int64_t hour, const SensorParams& s,
                                           double fault_amplitude_ratio, Rng64& rng) {
  VibrationFrame f;
  f.dispenser = dispenser;
  f.hour = hour;
  f.sample_rate = s.vibration_sample_rate;
  const int n = s.vibration_frame_len;
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  std::array<double, 4> phases{};
  for (double& ph : phases) ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    const double t = i / s.vibration_sample_rate;
    double v = 0.0;
    for (std::size_t k = 0; k < s.vibration_tones_hz.size(); ++k)
      v += s.vibration_tone_amplitude * std::sin(2.0 * std::numbers::pi * s.vibration_tones_hz[k] * t + phases[k]);
    if (fault_amplitude_ratio > 0.0)
      v += fault_amplitude_ratio * s.vibration_tone_amplitude *
           std::sin(2.0 * std::numbers::pi * s.fault_tone_hz * t + phases[3]);
    x[static_cast<std::size_t>(i)] = v + s.vibration_noise_sd * rng.gaussian();
  }
  f.samples = quantize_frame(x, f.counts_per_unit);
  return f;
}

/// End-of-day sensor sweep: one vibration frame per dispenser and one reading per fleet vehicle.
/// `day_start_hour` is the first hour of the day being closed.
inline DaySensors sense_day(WorldState& world, const StationParams& p, const std::vector<FaultInjection>& faults,
                            std::int64_t day_start_hour) {
  DaySensors ds;
  ds.day = day_start_hour / kHoursPerDay;
  const std::int64_t day_end_hour = day_start_hour + kHoursPerDay - 1;
  Rng64& rng = world.sensor_rng;
  for (int d = 0; d < p.sensors.dispensers; ++d) {
    const double fault = active_magnitude(faults, FaultKind::vibration, day_end_hour, d);
    ds.frames.push_back(make_vibration_frame(d, day_end_hour, p.sensors, fault, rng));
  }
  const SensorParams& s = p.sensors;
  for (int v = 0; v < s.fleet_vehicles; ++v) {
    VehicleReading r;
    r.vehicle = v;
    r.hour = day_start_hour;
    double& dev = world.battery_state[static_cast<std::size_t>(v)];
    for (int h = 0; h < kHoursPerDay; ++h) {
      dev = s.battery_ar * dev + s.battery_noise_sd * rng.gaussian();
      double volts = s.battery_nominal + dev;
      for (const auto& f : faults)
        if (f.kind == FaultKind::battery && f.target == v && f.start_hour == day_start_hour + h) volts -= f.magnitude;
      r.volts_mv.push_back(std::llround(volts * 1000.0));
    }
    auto& tires = world.tire_psi[static_cast<std::size_t>(v)];
    for (int t = 0; t < 4; ++t) {
      const double loss_per_day = t == 0 ? active_magnitude(faults, FaultKind::tire, day_end_hour, v) : 0.0;
      tires[static_cast<std::size_t>(t)] = std::max(0.0, tires[static_cast<std::size_t>(t)] - loss_per_day);
      const double reading = std::max(0.0, tires[static_cast<std::size_t>(t)] + s.tire_noise_sd * rng.gaussian());
      r.tire_cpsi.push_back(std::llround(reading * 100.0));
    }
    ds.vehicles.push_back(std::move(r));
  }
  return ds;
}

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_WORLD_HPP
