#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>

#include "fuelsim/pricing/qlearning.hpp"
#include "fuelsim/sim/episode.hpp"

using namespace fuelsim;
using namespace fuelsim::sim;

namespace {

// Scalar SplitMix64 written out from the published reference, independent of Rng64.
std::uint64_t splitmix_ref(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

StationParams neutral_station() {
  StationParams p;
  p.weather_damping = 0.0;
  p.traffic_gain = 0.0;
  return p;
}

class FixedPrice final : public PricingPolicy {
 public:
  explicit FixedPrice(Price p) : p_(p) {}
  Price post(const PricingContext&) override { return p_; }

 private:
  Price p_;
};

}  // namespace

TEST(Rng, SplitMixSeedZeroGolden) {
  auto [r1, a] = rng_next(Rng64{0});
  auto [r2, b] = rng_next(r1);
  EXPECT_EQ(a, 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(b, 0x6E789E6AA1B965F4ULL);
  (void)r2;
}

TEST(Rng, MatchesScalarReferenceOverManySeeds) {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL, ~0ULL}) {
    std::uint64_t x = seed;
    Rng64 r{seed};
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(r.next(), splitmix_ref(x)) << "seed " << seed << " step " << i;
  }
}

TEST(Rng, PureStepIsRepeatable) {
  const Rng64 r{12345};
  EXPECT_EQ(rng_next(r).second, rng_next(r).second);
  EXPECT_EQ(rng_next(r).first.state, rng_next(r).first.state);
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  Rng64 r{9};
  const auto before = r.state;
  const Rng64 a = r.fork(1);
  const Rng64 b = r.fork(2);
  EXPECT_EQ(r.state, before);
  EXPECT_NE(a.state, b.state);
}

TEST(Units, VolumeTimesPriceIsExactMoney) {
  const Money m = gallons(12.345) * Price{319};
  EXPECT_EQ(m.raw, 12345 * 319);
  EXPECT_EQ(dollars(39.38055).raw, m.raw);
}

TEST(Exogenous, DegenerateWalkOnlyAdvancesClock) {
  StationParams p;
  p.exo.index_step_sd = 0.0;
  p.exo.index_reversion = 0.0;
  p.exo.margin_step_sd = 0.0;
  p.exo.margin_reversion = 0.0;
  p.exo.wholesale_daily_sd = 0.0;
  p.exo.event_daily_prob = 0.0;
  ExogenousState s;
  s.hour_of_day = 5;
  s.weather_index = 0.42;
  s.traffic_index = 0.17;
  auto [n, rng] = step_exogenous(s, p, Rng64{3});
  EXPECT_EQ(n.hour_of_day, 6);
  EXPECT_EQ(n.day_of_week, s.day_of_week);
  EXPECT_DOUBLE_EQ(n.weather_index, 0.42);
  EXPECT_DOUBLE_EQ(n.traffic_index, 0.17);
  EXPECT_DOUBLE_EQ(n.wholesale_cost, s.wholesale_cost);
  EXPECT_NEAR(n.competitor_price, s.competitor_price, 1e-12);
  (void)rng;
}

TEST(Exogenous, MidnightRollsDayOfWeek) {
  StationParams p;
  ExogenousState s;
  s.hour_of_day = 23;
  s.day_of_week = 6;
  auto [n, rng] = step_exogenous(s, p, Rng64{1});
  EXPECT_EQ(n.hour_of_day, 0);
  EXPECT_EQ(n.day_of_week, 0);
  s.day_of_week = 2;
  EXPECT_EQ(step_exogenous(s, p, Rng64{1}).first.day_of_week, 3);
  (void)rng;
}

TEST(Exogenous, StaysInRangeOverLongWalks) {
  StationParams p;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExogenousState s = initial_exogenous(p);
    Rng64 rng{seed};
    for (int i = 0; i < 10000; ++i) {
      std::tie(s, rng) = step_exogenous(s, p, rng);
      ASSERT_GE(s.weather_index, 0.0);
      ASSERT_LE(s.weather_index, 1.0);
      ASSERT_GE(s.traffic_index, 0.0);
      ASSERT_LE(s.traffic_index, 1.0);
      ASSERT_GE(s.competitor_price, s.wholesale_cost);
      ASSERT_GT(s.wholesale_cost, 0.0);
    }
  }
}

TEST(Demand, ParityGivesContextRate) {
  StationParams p;
  ExogenousState x;
  x.hour_of_day = 8;
  x.weather_index = 0.5;
  x.traffic_index = 0.4;
  const double expect = p.base_arrival_rate * p.daypart_multipliers[8] * (1 - p.weather_damping * 0.5) *
                        (1 + p.traffic_gain * 0.4);
  EXPECT_NEAR(demand_rate(x.competitor_cents(), x, p), expect, 1e-12);
}

TEST(Demand, ZeroElasticityIgnoresPrice) {
  StationParams p;
  p.elasticity_beta = 0.0;
  ExogenousState x;
  EXPECT_DOUBLE_EQ(demand_rate(Price{250}, x, p), demand_rate(Price{450}, x, p));
}

TEST(Demand, TenCentGapAtBetaTwo) {
  StationParams p = neutral_station();
  ExogenousState x;
  x.hour_of_day = 12;
  const double base = p.base_arrival_rate * p.daypart_multipliers[12];
  EXPECT_NEAR(demand_rate(x.competitor_cents() + Price{10}, x, p), base * std::exp(-0.2), 1e-12);
  EXPECT_NEAR(std::exp(-0.2), 0.8187, 1e-4);
}

TEST(Demand, RepeatProbabilityAtParity) {
  StationParams p;
  EXPECT_NEAR(repeat_probability(0.0, p), p.retention_at_parity, 1e-12);
  EXPECT_LT(repeat_probability(0.1, p), repeat_probability(0.0, p));
}

TEST(SimulateHour, ZeroDemandGivesNoVisits) {
  StationParams p;
  p.base_arrival_rate = 0.0;
  p.shop_only_rate = 0.0;
  WorldState w = initial_world(p, 5);
  const CustomerPopulation pop(p.repeat_users, Rng64{5}.fork(4));
  const auto out = simulate_hour(w, Price{300}, p, pop, {});
  EXPECT_TRUE(out.visits.empty());
  EXPECT_EQ(out.record.revenue.raw, 0);
  EXPECT_EQ(out.record.gallons_sold.raw, 0);
}

TEST(SimulateHour, EmptyTankTurnsEveryoneAway) {
  StationParams p;
  p.shop_only_rate = 0.0;
  p.base_arrival_rate = 200.0;
  WorldState w = initial_world(p, 8);
  w.tank = Volume{0};
  w.exo.hour_of_day = 8;
  const CustomerPopulation pop(p.repeat_users, Rng64{8}.fork(4));
  const auto out = simulate_hour(w, w.exo.competitor_cents(), p, pop, {});
  ASSERT_FALSE(out.visits.empty());
  for (const auto& v : out.visits) {
    EXPECT_EQ(v.kind, VisitKind::turned_away);
    EXPECT_EQ(v.gallons.raw, 0);
  }
  EXPECT_EQ(out.record.turned_away, static_cast<std::int64_t>(out.visits.size()));
}

TEST(SimulateHour, SmartCheckoutMixtureMean) {
  StationParams p;
  ASSERT_EQ(p.checkout_mode, CheckoutMode::smart);
  Rng64 rng{77};
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += checkout_seconds(p, rng);
  const double analytic = 0.979 * 55.0 + 0.021 * 150.0;
  EXPECT_NEAR(analytic, 57.0, 0.01);
  // Mixture sd is about 60 s, so the mean of 1e5 draws has sd about 0.19 s.
  EXPECT_NEAR(sum / n, analytic, 1.0);
}

TEST(Episode, DeterministicForSameSeed) {
  SimConfig c;
  c.seed = 11;
  MatchCompetitor a, b;
  pricing::DailyTopUp ia, ib;
  EXPECT_EQ(run_episode(c, a, ia, 7 * 24), run_episode(c, b, ib, 7 * 24));
}

TEST(Episode, ZeroArrivalsGiveZeroSales) {
  SimConfig c;
  c.station.base_arrival_rate = 0.0;
  c.station.shop_only_rate = 0.0;
  MatchCompetitor p;
  NoReorder inv;
  const auto log = run_episode(c, p, inv, 24);
  ASSERT_EQ(log.hours.size(), 24u);
  for (const auto& h : log.hours) {
    EXPECT_EQ(h.gallons_sold.raw, 0);
    EXPECT_EQ(h.revenue.raw, 0);
  }
}

TEST(Episode, HourlySalesEqualVisitSums) {
  SimConfig c;
  c.seed = 42;
  MatchCompetitor p;
  pricing::DailyTopUp inv;
  const auto log = run_episode(c, p, inv, 30 * 24);
  std::vector<std::int64_t> by_hour(log.hours.size(), 0);
  std::vector<std::int64_t> rev(log.hours.size(), 0);
  for (const auto& v : log.visits) {
    by_hour[static_cast<std::size_t>(v.hour)] += v.gallons.raw;
    rev[static_cast<std::size_t>(v.hour)] += v.gallons.raw * v.price_paid.raw;
  }
  for (std::size_t h = 0; h < log.hours.size(); ++h) {
    ASSERT_EQ(log.hours[h].gallons_sold.raw, by_hour[h]) << "hour " << h;
    ASSERT_EQ(log.hours[h].revenue.raw, rev[h]) << "hour " << h;
  }
  EXPECT_TRUE(tank_balance_holds(log));
}

TEST(Episode, TankBalanceWithLeakAndStockouts) {
  SimConfig c;
  c.seed = 4;
  c.station.initial_tank_level = 3000.0;
  c.faults.push_back({FaultKind::leak, 2, 0.01, 0});
  MatchCompetitor p;
  NoReorder inv;
  const auto log = run_episode(c, p, inv, 5 * 24);
  EXPECT_TRUE(tank_balance_holds(log));
  EXPECT_GT(log.total_leaked().raw, 0);
  std::int64_t turned = 0;
  for (const auto& h : log.hours) {
    ASSERT_GE(h.tank_level.raw, 0);
    turned += h.turned_away;
  }
  EXPECT_GT(turned, 0);
}

TEST(Episode, PriceNeverBelowWholesale) {
  SimConfig c;
  FixedPrice cheap(Price{1});
  pricing::DailyTopUp inv;
  const auto log = run_episode(c, cheap, inv, 48);
  for (const auto& h : log.hours) {
    EXPECT_TRUE(h.price_clamped);
    EXPECT_EQ(h.posted_price, h.exo.wholesale_cents());
  }
}

TEST(Episode, ShortHorizonRejected) {
  SimConfig c;
  MatchCompetitor p;
  NoReorder inv;
  EXPECT_THROW(run_episode(c, p, inv, 23), ConfigError);
}

TEST(Episode, InvalidStationNamesField) {
  SimConfig c;
  c.station.elasticity_beta = -1.0;
  MatchCompetitor p;
  NoReorder inv;
  try {
    run_episode(c, p, inv, 24);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "elasticity_beta");
  }
}

TEST(Episode, FraudStreamLeavesCleanVisitsUntouched) {
  SimConfig clean;
  clean.seed = 6;
  SimConfig dirty = clean;
  dirty.faults.push_back({FaultKind::fraud, 0, 0.5, 0});
  MatchCompetitor p1, p2;
  NoReorder i1, i2;
  const auto a = run_episode(clean, p1, i1, 24);
  const auto b = run_episode(dirty, p2, i2, 24);
  std::vector<CustomerVisit> b_clean;
  for (const auto& v : b.visits)
    if (v.kind != VisitKind::unauthorized) b_clean.push_back(v);
  // The tank never runs dry here, so removing fraud leaves the lawful visits identical.
  EXPECT_EQ(a.visits, b_clean);
  EXPECT_GT(b.visits.size(), a.visits.size());
}
