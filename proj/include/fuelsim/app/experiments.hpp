#ifndef FUELSIM_APP_EXPERIMENTS_HPP
#define FUELSIM_APP_EXPERIMENTS_HPP

// Experiment harnesses shared by the command line and the acceptance gate.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fuelsim/config/scenario.hpp"
#include "fuelsim/forecast/arx.hpp"
#include "fuelsim/pricing/qlearning.hpp"
#include "fuelsim/sim/episode.hpp"
#include "fuelsim/telemetry/eventlog.hpp"

namespace fuelsim::app {

inline Money total_margin(const sim::EpisodeLog& log) {
  Money m{};
  for (const auto& h : log.hours) m += h.margin();
  return m;
}

/// Pricing-only episode: the tank is topped up daily so margins reflect prices alone.
inline sim::EpisodeLog pricing_episode(const sim::SimConfig& c, sim::PricingPolicy& p, std::int64_t hours) {
  pricing::DailyTopUp inv;
  return sim::run_episode(c, p, inv, hours);
}

struct BenchRow {
  std::int64_t seed = 0;
  Money margin_greedy{};
  Money margin_fixed{};
  Money margin_match{};
  bool tank_balanced = true;  // every evaluation episode conserved fuel exactly
  double uplift_pct() const {
    return 100.0 * (static_cast<double>(margin_greedy.raw) / static_cast<double>(margin_fixed.raw) - 1.0);
  }
};

/// Seed s trains its own table from s, then greedy and both baselines face the same
/// evaluation world (seed s). Training episodes use derived seeds, never s itself.
inline BenchRow bench_seed(const config::ScenarioConfig& cfg, std::int64_t seed) {
  sim::SimConfig sc = cfg.sim_config();
  sc.seed = static_cast<std::uint64_t>(seed);
  const auto trained = pricing::train_policy(sc, cfg.qlearn);
  pricing::GreedyPolicy greedy(trained.table);
  pricing::BaselinePolicy fixed(pricing::BaselineKind::fixed_margin);
  pricing::BaselinePolicy match(pricing::BaselineKind::competitor_match);
  const std::int64_t h = cfg.horizon_hours();
  BenchRow row{seed, {}, {}, {}, true};
  for (auto [policy, margin] : {std::pair{static_cast<sim::PricingPolicy*>(&greedy), &row.margin_greedy},
                                std::pair{static_cast<sim::PricingPolicy*>(&fixed), &row.margin_fixed},
                                std::pair{static_cast<sim::PricingPolicy*>(&match), &row.margin_match}}) {
    const auto log = pricing_episode(sc, *policy, h);
    *margin = total_margin(log);
    row.tank_balanced = row.tank_balanced && sim::tank_balance_holds(log);
  }
  return row;
}

inline std::vector<BenchRow> bench_pricing(const config::ScenarioConfig& cfg, int seeds) {
  std::vector<BenchRow> rows;
  for (int s = 1; s <= seeds; ++s) rows.push_back(bench_seed(cfg, s));
  return rows;
}

inline double mean_uplift_pct(const std::vector<BenchRow>& rows) {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.uplift_pct();
  return s / static_cast<double>(rows.size());
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "seed,margin_greedy,margin_fixed,margin_match,uplift_pct\n";
  char buf[256];
  Money g{}, f{}, m{};
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%s,%s,%s,%.4f\n", static_cast<long long>(r.seed),
                  ops::money_str(r.margin_greedy).c_str(), ops::money_str(r.margin_fixed).c_str(),
                  ops::money_str(r.margin_match).c_str(), r.uplift_pct());
    os << buf;
    g += r.margin_greedy;
    f += r.margin_fixed;
    m += r.margin_match;
  }
  if (rows.empty()) return;
  const auto n = static_cast<std::int64_t>(rows.size());
  std::snprintf(buf, sizeof buf, "mean,%s,%s,%s,%.4f\n", ops::money_str(Money{g.raw / n}).c_str(),
                ops::money_str(Money{f.raw / n}).c_str(), ops::money_str(Money{m.raw / n}).c_str(),
                mean_uplift_pct(rows));
  os << buf;
}

struct DemandSeries {
  std::vector<double> gallons;
  std::vector<sim::ExogenousState> exo;
  bool tank_balanced = true;
};

/// Hourly gallons and world state of one scenario episode under the fixed-margin
/// baseline with daily top-up, so the series carries no stockout censoring.
inline DemandSeries demand_series(const config::ScenarioConfig& cfg) {
  pricing::BaselinePolicy fixed(pricing::BaselineKind::fixed_margin);
  const auto log = pricing_episode(cfg.sim_config(), fixed, cfg.horizon_hours());
  DemandSeries d;
  for (const auto& h : log.hours) {
    d.gallons.push_back(to_gallons(h.gallons_sold));
    d.exo.push_back(h.exo);
  }
  d.tank_balanced = sim::tank_balance_holds(log);
  return d;
}

inline forecast::BacktestResult backtest_series(const config::ScenarioConfig& cfg, const DemandSeries& d) {
  const auto& fp = cfg.governance.forecaster;
  return forecast::rolling_backtest(d.gallons, d.exo, static_cast<std::size_t>(fp.n_lags), fp.ridge_lambda,
                                    static_cast<std::size_t>(fp.window_days) * sim::kHoursPerDay,
                                    static_cast<std::size_t>(cfg.backtest_step_hours));
}

inline forecast::BacktestResult backtest_forecast(const config::ScenarioConfig& cfg) {
  return backtest_series(cfg, demand_series(cfg));
}

/// One row per window, then a `mean` row.
inline void write_backtest_csv(std::ostream& os, const forecast::BacktestResult& r) {
  os << "window_start,points,arx_mse,persistence_mse,arx_mae,persistence_mae\n";
  char buf[256];
  for (std::size_t i = 0; i < r.arx.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%.6f,%.6f\n", r.arx[i].window_start, r.arx[i].n_points,
                  r.arx[i].mse, r.persistence[i].mse, r.arx[i].mae, r.persistence[i].mae);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "mean,,%.6f,%.6f,,\n", r.mean_arx_mse(), r.mean_persistence_mse());
  os << buf;
}

/// Forecast overlay: actual against both one-step predictions, point by point.
inline void write_overlay_csv(std::ostream& os, const forecast::BacktestResult& r) {
  os << "index,actual,arx,persistence\n";
  char buf[128];
  for (std::size_t i = 0; i < r.actual.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", i, r.actual[i], r.arx_pred[i], r.persistence_pred[i]);
    os << buf;
  }
}

inline telemetry::LogHeader log_header(const config::ScenarioConfig& cfg) {
  telemetry::LogHeader h;
  h.config_digest = cfg.digest;
  h.seed = cfg.seed;
  h.initial_tank = gallons(cfg.station.initial_tank_level);
  h.holding_mc_per_gal_day = dollars(cfg.governance.inventory.holding_cost).raw;
  return h;
}

/// Full governed run streamed to `events`. Greedy pricing needs `table`.
inline ops::GovernedRun simulate(const config::ScenarioConfig& cfg, config::PricingChoice choice, std::ostream& events,
                                 const std::filesystem::path& frames_dir, const pricing::QTable* table = nullptr) {
  telemetry::EventLogWriter writer(events, frames_dir, log_header(cfg));
  const auto sc = cfg.sim_config();
  switch (choice) {
    case config::PricingChoice::greedy: {
      if (table == nullptr) throw Error("simulate: greedy pricing needs a trained table");
      pricing::GreedyPolicy g(*table);
      return ops::run_governed(sc, cfg.governance, g, cfg.horizon_hours(), &writer, &g, table);
    }
    case config::PricingChoice::fixed_margin: {
      pricing::BaselinePolicy p(pricing::BaselineKind::fixed_margin);
      return ops::run_governed(sc, cfg.governance, p, cfg.horizon_hours(), &writer);
    }
    case config::PricingChoice::competitor_match: {
      pricing::BaselinePolicy p(pricing::BaselineKind::competitor_match);
      return ops::run_governed(sc, cfg.governance, p, cfg.horizon_hours(), &writer);
    }
  }
  throw Error("simulate: unknown pricing policy");
}

}  // namespace fuelsim::app

#endif  // FUELSIM_APP_EXPERIMENTS_HPP
