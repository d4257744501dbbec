// fuelsim: scenario runner and experiment harness.
// Exit codes: 0 success, 1 config or validation failure, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fuelsim/app/experiments.hpp"
#include "fuelsim/recommender/mf.hpp"

namespace fs = std::filesystem;
using namespace fuelsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

/// Failure the user can fix by changing inputs; maps to exit code 1.
struct InvalidInput : Error {
  using Error::Error;
};

config::ScenarioConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw InvalidInput("config file not found: " + path);
  return config::parse_config(telemetry::read_file(path));
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

void ensure_dir(const fs::path& dir) {
  fs::create_directories(dir);
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
}

void write_qtable(const fs::path& p, const pricing::QTable& q) {
  auto os = open_out(p);
  pricing::write_qtable_csv(os, q);
}

int cmd_simulate(const std::string& cfg_path, const fs::path& out, const std::string& policy_flag) {
  auto cfg = load_config(cfg_path);
  auto choice = cfg.policy;
  if (!policy_flag.empty()) {
    auto p = config::parse_pricing_choice(policy_flag);
    if (!p) throw InvalidInput("unknown --policy '" + policy_flag + "'");
    choice = *p;
  }
  ensure_dir(out);
  std::optional<pricing::TrainingResult> trained;
  if (choice == config::PricingChoice::greedy) {
    std::fprintf(stderr, "training pricing policy (%d episodes)\n", cfg.qlearn.episodes);
    trained = pricing::train_policy(cfg.sim_config(), cfg.qlearn);
    write_qtable(out / "qtable.csv", trained->table);
  }
  ops::GovernedRun run;
  {
    auto events = open_out(out / "events.ndx");
    run = app::simulate(cfg, choice, events, out / "frames", trained ? &trained->table : nullptr);
    if (!events.flush()) throw Error("write failed: events.ndx");
  }
  {
    auto kpi = open_out(out / "kpi.csv");
    ops::write_kpi_csv(kpi, run.kpi_rows);
  }
  if (!sim::tank_balance_holds(run.log)) throw Error("tank balance identity violated");
  std::printf("policy %s  days %d  digest %s  alerts %zu  bookings %zu\n", config::to_string(choice).c_str(),
              cfg.horizon_days, telemetry::digest_hex(cfg.digest).c_str(), run.alerts.size(), run.bookings.size());
  ops::write_kpi_table(std::cout, run.kpi_rows);
  return kExitOk;
}

int cmd_train_pricing(const std::string& cfg_path, const fs::path& out) {
  const auto cfg = load_config(cfg_path);
  ensure_dir(out);
  const auto trained = pricing::train_policy(cfg.sim_config(), cfg.qlearn);
  write_qtable(out / "qtable.csv", trained.table);
  auto curve = open_out(out / "curve.csv");
  pricing::write_training_curve_csv(curve, trained.curve);
  std::printf("episodes %zu  first reward %.2f  last reward %.2f\n", trained.curve.size(),
              trained.curve.front().total_reward, trained.curve.back().total_reward);
  return kExitOk;
}

int cmd_bench_pricing(const std::string& cfg_path, int seeds, const fs::path& out) {
  const auto cfg = load_config(cfg_path);
  if (seeds < 1) throw InvalidInput("--seeds must be >= 1");
  ensure_dir(out);
  const auto rows = app::bench_pricing(cfg, seeds);
  {
    auto os = open_out(out / "uplift.csv");
    app::write_bench_csv(os, rows);
  }
  app::write_bench_csv(std::cout, rows);
  return kExitOk;
}

int cmd_backtest(const std::string& cfg_path, const fs::path& out) {
  const auto cfg = load_config(cfg_path);
  ensure_dir(out);
  const auto r = app::backtest_forecast(cfg);
  {
    auto os = open_out(out / "backtest.csv");
    app::write_backtest_csv(os, r);
  }
  {
    auto os = open_out(out / "overlay.csv");
    app::write_overlay_csv(os, r);
  }
  std::printf("%-12s %12s\n%-12s %12.3f\n%-12s %12.3f\n%-12s %12.4f\n", "model", "mse", "arx", r.mean_arx_mse(),
              "persistence", r.mean_persistence_mse(), "ratio", r.mean_arx_mse() / r.mean_persistence_mse());
  return kExitOk;
}

telemetry::EventLog load_log(const std::string& path) {
  if (!fs::exists(path)) throw InvalidInput("log not found: " + path);
  try {
    return telemetry::parse_event_log(telemetry::read_file(path));
  } catch (const ParseError& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

int cmd_train_recommender(const std::string& log_path, const fs::path& out) {
  const auto ev = load_log(log_path);
  const auto rep = telemetry::replay(ev);
  int n_users = 0;
  for (const auto& v : rep.log.visits) {
    const bool repeat = v.user_id >= 0 && v.user_id < sim::kAnonymousIdBase;
    if (repeat && !v.basket.empty()) n_users = std::max(n_users, static_cast<int>(v.user_id) + 1);
  }
  if (n_users == 0) throw InvalidInput("log has no baskets from repeat customers");
  const auto m = recommender::interactions_from_visits(rep.log.visits, n_users, sim::kCatalogSize);
  const recommender::MfParams params{};
  Rng64 rng = Rng64{static_cast<std::uint64_t>(ev.header.seed)}.fork(21);
  const auto split = recommender::split_holdout(m, 0.2, rng);
  const auto fit = recommender::train_mf(split.train, params, rng);
  const double rmse = recommender::rmse_holdout(fit.factors, split.holdout);
  const double base = recommender::global_mean_rmse(split.train, split.holdout);
  ensure_dir(out);
  {
    auto os = open_out(out / "factors.csv");
    recommender::write_factors_csv(os, fit.factors);
  }
  {
    auto os = open_out(out / "heatmap.csv");
    recommender::write_heatmap_csv(os, fit.factors);
  }
  std::printf("users %d  items %d  observed %zu  holdout %zu\nholdout_rmse %.6f  global_mean_rmse %.6f\n", n_users,
              sim::kCatalogSize, m.entries.size(), split.holdout.size(), rmse, base);
  return kExitOk;
}

int cmd_replay(const std::string& log_path, const fs::path& out) {
  const auto ev = load_log(log_path);
  const auto rep = telemetry::replay(ev);
  ensure_dir(out);
  {
    auto os = open_out(out / "kpi.csv");
    ops::write_kpi_csv(os, rep.recomputed);
  }
  if (!sim::tank_balance_holds(rep.log)) {
    std::fprintf(stderr, "replay: tank balance identity violated\n");
    return kExitInvalid;
  }
  if (auto i = rep.first_mismatch()) {
    std::fprintf(stderr, "replay: kpi row %zu differs\n  embedded   %s\n  recomputed %s\n", *i,
                 ops::kpi_csv_row(rep.embedded[*i]).c_str(), ops::kpi_csv_row(rep.recomputed[*i]).c_str());
    return kExitInvalid;
  }
  std::printf("replayed %zu records, %zu kpi rows match\n", ev.records.size(), rep.embedded.size());
  return kExitOk;
}

int cmd_report(const fs::path& run) {
  const auto log_path = run / "events.ndx";
  if (!fs::exists(log_path)) throw InvalidInput("no events.ndx in " + run.string());
  const auto rep = telemetry::replay(load_log(log_path.string()));
  ops::write_kpi_table(std::cout, rep.embedded);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuel station digital twin: simulate, train, backtest, replay and report"};
  app.require_subcommand(1);

  std::string config_path, out_dir, policy, log_path, run_dir;
  int seeds = 10;

  auto* sim_cmd = app.add_subcommand("simulate", "Full governed run; writes events.ndx, frames/ and kpi.csv");
  sim_cmd->add_option("--config", config_path, "Scenario config file")->required();
  sim_cmd->add_option("--out", out_dir, "Output directory")->required();
  sim_cmd->add_option("--policy", policy, "greedy|fixed_margin|competitor_match (default from config)");

  auto* train_cmd = app.add_subcommand("train-pricing", "Train the pricing table; writes qtable.csv and curve.csv");
  train_cmd->add_option("--config", config_path, "Scenario config file")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* bench_cmd = app.add_subcommand("bench-pricing", "Trained greedy vs both baselines on seeds 1..N");
  bench_cmd->add_option("--config", config_path, "Scenario config file")->required();
  bench_cmd->add_option("--seeds", seeds, "Evaluate seeds 1..N")->required();
  bench_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* bt_cmd = app.add_subcommand("backtest-forecast", "Walk-forward ARX vs persistence MSE");
  bt_cmd->add_option("--config", config_path, "Scenario config file")->required();
  bt_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* rec_cmd = app.add_subcommand("train-recommender", "Factorize baskets from an event log");
  rec_cmd->add_option("--from-log", log_path, "events.ndx written by simulate")->required();
  rec_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* replay_cmd = app.add_subcommand("replay", "Recompute KPIs from a log; nonzero exit on mismatch");
  replay_cmd->add_option("--log", log_path, "events.ndx to replay")->required();
  replay_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "Print the KPI table of a run directory");
  report_cmd->add_option("--run", run_dir, "Directory written by simulate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kExitInvalid;
  }

  try {
    if (*sim_cmd) return cmd_simulate(config_path, out_dir, policy);
    if (*train_cmd) return cmd_train_pricing(config_path, out_dir);
    if (*bench_cmd) return cmd_bench_pricing(config_path, seeds, out_dir);
    if (*bt_cmd) return cmd_backtest(config_path, out_dir);
    if (*rec_cmd) return cmd_train_recommender(log_path, out_dir);
    if (*replay_cmd) return cmd_replay(log_path, out_dir);
    if (*report_cmd) return cmd_report(run_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
