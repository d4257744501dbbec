// Acceptance gate: one PASS/FAIL line per criterion, measured values alongside.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fuelsim/app/experiments.hpp"
#include "fuelsim/monitor/fft.hpp"
#include "fuelsim/ops/governance.hpp"
#include "fuelsim/recommender/mf.hpp"

using namespace fuelsim;
namespace fs = std::filesystem;

namespace {

// Every episode an acceptance run produces is checked for exact fuel conservation.
struct Conservation {
  int runs = 0;
  int violations = 0;
  void check(bool balanced) {
    ++runs;
    if (!balanced) ++violations;
  }
  void check(const sim::EpisodeLog& log) { check(sim::tank_balance_holds(log)); }
} conservation;

struct Verdict {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // extra indented lines, e.g. per-seed values
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(const char* id, const char* title, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what(), {}};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_budget = budget_s <= 0.0 || secs < budget_s;
  const bool ok = v.pass && in_budget;
  if (!ok) ++failures;
  std::string timing = budget_s > 0.0 ? fmt("%.1fs of %.0fs", secs, budget_s) : fmt("%.1fs", secs);
  if (!in_budget) timing += " OVER BUDGET";
  std::printf("%s %-4s %-22s %s [%s]\n", ok ? "PASS" : "FAIL", id, title, v.detail.c_str(), timing.c_str());
  for (const auto& n : v.notes) std::printf("       %s\n", n.c_str());
  std::fflush(stdout);
}

// ---- A1 ----------------------------------------------------------------------

Verdict pricing_uplift() {
  const auto cfg = config::default_config();
  const auto rows = app::bench_pricing(cfg, 10);
  Verdict v;
  for (const auto& r : rows) {
    conservation.check(r.tank_balanced);
    v.notes.push_back(fmt("seed %2lld  greedy $%.2f  fixed $%.2f  match $%.2f  uplift %+.2f%%",
                          static_cast<long long>(r.seed), to_dollars(r.margin_greedy), to_dollars(r.margin_fixed),
                          to_dollars(r.margin_match), r.uplift_pct()));
  }
  const double mean = app::mean_uplift_pct(rows);
  v.pass = rows.size() == 10 && mean >= 5.0;
  v.detail = fmt("mean uplift over fixed_margin %.2f%% (floor 5%%, %d episodes, %d days)", mean, cfg.qlearn.episodes,
                 cfg.horizon_days);
  return v;
}

// ---- A2 ----------------------------------------------------------------------

Verdict toy_mdp() {
  // Two states, two actions; action a leads to state a; reward 1 for staying.
  const double gamma = 0.9;
  auto reward = [](int s, int a) { return s == a ? 1.0 : 0.0; };
  double vi[2][2] = {};
  for (int it = 0; it < 100000; ++it) {
    double next[2][2], resid = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        next[s][a] = reward(s, a) + gamma * std::max(vi[a][0], vi[a][1]);
        resid = std::max(resid, std::abs(next[s][a] - vi[s][a]));
      }
    std::copy(&next[0][0], &next[0][0] + 4, &vi[0][0]);
    if (resid < 1e-13) break;
  }
  pricing::QTable q;
  for (int sweep = 0; sweep < 10000; ++sweep)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) pricing::q_update(q, s, a, reward(s, a), a, 0.5, gamma);
  double worst = 0.0;
  bool same_greedy = true;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(q.values[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] - vi[s][a]));
    same_greedy = same_greedy && q.greedy_action(s) == (vi[s][1] > vi[s][0] ? 1 : 0);
  }
  return {worst <= 1e-6 && same_greedy,
          fmt("max |Q - Q*| %.2e, greedy %s, Q*(0,0) %.6f", worst, same_greedy ? "identical" : "DIFFERS", vi[0][0]),
          {}};
}

// ---- A3 ----------------------------------------------------------------------

Verdict forecasting() {
  auto cfg = config::default_config();
  Verdict v;
  v.pass = true;
  double worst = 0.0;
  std::string ratios;
  for (int s = 1; s <= 10; ++s) {
    cfg.seed = s;
    const auto series = app::demand_series(cfg);
    conservation.check(series.tank_balanced);
    const auto r = app::backtest_series(cfg, series);
    const double ratio = r.mean_arx_mse() / r.mean_persistence_mse();
    worst = std::max(worst, ratio);
    v.pass = v.pass && ratio <= 0.9;
    v.notes.push_back(fmt("seed %2d  arx mse %.2f  persistence mse %.2f  ratio %.3f  windows %zu", s, r.mean_arx_mse(),
                          r.mean_persistence_mse(), ratio, r.arx.size()));
  }
  v.detail = fmt("worst ARX/persistence MSE ratio %.3f over seeds 1-10 (ceiling 0.9)", worst);
  return v;
}

// ---- A4 ----------------------------------------------------------------------

Verdict inventory() {
  const auto cfg = config::default_config();
  ops::GovernanceParams fd = cfg.governance;
  fd.inventory.kind = ops::PolicyKind::forecast_driven;
  ops::GovernanceParams fixed = cfg.governance;
  fixed.inventory.kind = ops::PolicyKind::fixed_schedule;
  fixed.inventory.fixed_interval = 168;
  fixed.inventory.order_up_to = cfg.station.tank_capacity;
  Verdict v;
  int wins = 0;
  double reduction_sum = 0.0;
  std::int64_t stockout_hours = 0, hours = 0;
  for (int s = 1; s <= 10; ++s) {
    sim::SimConfig sc = cfg.sim_config();
    sc.seed = static_cast<std::uint64_t>(s);
    pricing::BaselinePolicy pa(pricing::BaselineKind::fixed_margin), pb(pricing::BaselineKind::fixed_margin);
    const auto a = ops::run_governed(sc, fd, pa, cfg.horizon_hours());
    const auto b = ops::run_governed(sc, fixed, pb, cfg.horizon_hours());
    conservation.check(a.log);
    conservation.check(b.log);
    const auto ka = ops::emit_kpi_report(a.log, {0, cfg.horizon_hours()}, a.alerts, {dollars(fd.inventory.holding_cost).raw});
    const auto kb = ops::emit_kpi_report(b.log, {0, cfg.horizon_hours()}, b.alerts, {dollars(fixed.inventory.holding_cost).raw});
    for (const auto& h : a.log.hours) {
      ++hours;
      if (h.turned_away > 0) ++stockout_hours;
    }
    const bool win = ka.stockout_customers < kb.stockout_customers && ka.holding_cost_total < kb.holding_cost_total;
    wins += win ? 1 : 0;
    const double reduction = 100.0 * (1.0 - static_cast<double>(ka.holding_cost_total.raw) / static_cast<double>(kb.holding_cost_total.raw));
    reduction_sum += reduction;
    v.notes.push_back(fmt("seed %2d  stockouts %lld vs %lld  holding $%.2f vs $%.2f  (%.1f%% lower)%s", s,
                          static_cast<long long>(ka.stockout_customers), static_cast<long long>(kb.stockout_customers),
                          to_dollars(ka.holding_cost_total), to_dollars(kb.holding_cost_total), reduction,
                          win ? "" : "  not a win"));
  }
  const double stockout_share = static_cast<double>(stockout_hours) / static_cast<double>(hours);
  v.pass = wins >= 8;
  v.detail = fmt("forecast_driven wins %d/10 on both stockouts and holding; mean holding reduction %.1f%%; stockout hours %.2f%%",
                 wins, reduction_sum / 10.0, 100.0 * stockout_share);
  return v;
}

// ---- A5 ----------------------------------------------------------------------

double reference_mf_loss(const recommender::InteractionMatrix& m, const recommender::LatentFactors& f, double lambda) {
  long double total = 0.0L;
  for (const auto& e : m.entries) {
    long double dot = 0.0L, nu = 0.0L, nv = 0.0L;
    for (int c = 0; c < f.k; ++c) {
      const double a = f.U[static_cast<std::size_t>(e.user * f.k + c)];
      const double b = f.V[static_cast<std::size_t>(e.item * f.k + c)];
      dot += static_cast<long double>(a) * b;
      nu += static_cast<long double>(a) * a;
      nv += static_cast<long double>(b) * b;
    }
    const long double err = e.rating - dot;
    total += err * err + lambda * (nu + nv);
  }
  return static_cast<double>(total);
}

Verdict recommender_checks() {
  using namespace recommender;
  // Rank-one recovery on a fully observed 4x4 matrix.
  const std::vector<double> u{1.0, 0.5, 1.5, 0.8}, w{0.9, 1.2, 0.4, 1.1};
  InteractionMatrix full{4, 4, {}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) full.entries.push_back({i, j, u[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)]});
  Rng64 r1{11};
  const double rank1 = rmse_holdout(train_mf(full, MfParams{1, 0.0, 0.05, 2000}, r1).factors, full.entries);

  // Simulator baskets: repeat customers against the catalog.
  const auto cfg = config::default_config();
  pricing::BaselinePolicy fixed(pricing::BaselineKind::fixed_margin);
  const auto log = app::pricing_episode(cfg.sim_config(), fixed, cfg.horizon_hours());
  conservation.check(log);
  const auto m = interactions_from_visits(log.visits, cfg.station.repeat_users, sim::kCatalogSize);
  Rng64 r2 = Rng64{static_cast<std::uint64_t>(cfg.seed)}.fork(21);
  const auto split = split_holdout(m, cfg.holdout_fraction, r2);
  const auto fit = train_mf(split.train, cfg.recommender, r2);
  const double holdout = rmse_holdout(fit.factors, split.holdout);
  const double baseline = global_mean_rmse(split.train, split.holdout);

  // Central finite differences against the analytic gradient.
  const auto g_m = synthetic_interactions(12, 9, 3);
  Rng64 r3{6};
  auto f = init_factors(g_m.n_users, g_m.n_items, 3, r3);
  for (double& x : f.U) x *= 5;
  for (double& x : f.V) x *= 5;
  const double lambda = 0.07, h = 1e-6;
  const auto g = loss_gradient(g_m, f, lambda);
  double worst_rel = 0.0;
  for (auto [params, grad] : {std::pair{&f.U, &g.dU}, std::pair{&f.V, &g.dV}}) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < params->size(); ++i) {
      const double keep = (*params)[i];
      (*params)[i] = keep + h;
      const double up = reference_mf_loss(g_m, f, lambda);
      (*params)[i] = keep - h;
      const double down = reference_mf_loss(g_m, f, lambda);
      (*params)[i] = keep;
      const double fd = (up - down) / (2 * h);
      num += (fd - (*grad)[i]) * (fd - (*grad)[i]);
      den += (*grad)[i] * (*grad)[i];
    }
    worst_rel = std::max(worst_rel, std::sqrt(num / den));
  }
  return {rank1 < 1e-3 && holdout < baseline && worst_rel < 1e-5,
          fmt("rank-1 rmse %.2e; holdout rmse %.4f vs global mean %.4f (%zu observed); gradient rel err %.2e", rank1,
              holdout, baseline, m.entries.size(), worst_rel),
          {}};
}

// ---- A6 ----------------------------------------------------------------------

Verdict leak_detection() {
  const auto cfg = config::default_config();
  const std::int64_t onset = 240, hours = 30 * 24;
  int detected = 0, false_alarm_seeds = 0;
  std::string latencies;
  for (int s = 1; s <= 20; ++s) {
    sim::SimConfig sc = cfg.sim_config();
    sc.seed = static_cast<std::uint64_t>(s);
    sc.faults = {{sim::FaultKind::leak, onset, 0.005, 0}};
    pricing::BaselinePolicy p(pricing::BaselineKind::fixed_margin);
    const auto leaky = ops::run_governed(sc, cfg.governance, p, hours);
    conservation.check(leaky.log);
    std::int64_t first = -1;
    bool early = false;
    for (const auto& a : leaky.alerts) {
      if (a.kind != monitor::AlertKind::leak) continue;
      if (a.timestamp < onset) early = true;
      else if (first < 0) first = a.timestamp;
    }
    if (!early && first >= 0 && first - onset <= 72) ++detected;
    latencies += first >= 0 ? fmt(" %lld", static_cast<long long>(first - onset)) : std::string(" -");

    sc.faults.clear();
    const auto clean = ops::run_governed(sc, cfg.governance, p, hours);
    conservation.check(clean.log);
    const bool any = std::any_of(clean.alerts.begin(), clean.alerts.end(),
                                 [](const monitor::Alert& a) { return a.kind == monitor::AlertKind::leak; });
    if (any) ++false_alarm_seeds;
  }
  return {detected >= 18 && false_alarm_seeds == 0,
          fmt("detected within 72h %d/20; leak-free seeds with alarms %d/20", detected, false_alarm_seeds),
          {"detection latency (h) per seed:" + latencies}};
}

// ---- A7 ----------------------------------------------------------------------

Verdict fft_checks() {
  double worst_bin = 0.0, worst_parseval = 0.0, tone_err = 0.0;
  for (std::size_t n : {8u, 64u, 1024u}) {
    Rng64 rng{n};
    std::vector<double> x(n);
    for (double& v : x) v = rng.gaussian();
    const auto s = monitor::dft(x, 1000.0);
    for (std::size_t k = 0; k <= n / 2; ++k) {
      std::complex<long double> acc = 0.0L;
      for (std::size_t t = 0; t < n; ++t) {
        const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) / static_cast<long double>(n);
        acc += static_cast<long double>(x[t]) * std::complex<long double>(std::cos(ang), std::sin(ang));
      }
      worst_bin = std::max(worst_bin, std::abs(s.magnitudes[k] - static_cast<double>(std::abs(acc))));
    }
    double energy = 0.0;
    for (double v : x) energy += v * v;
    worst_parseval = std::max(worst_parseval, std::abs(s.full_power() / static_cast<double>(n) - energy) / energy);
    if (n >= 16) {
      std::vector<double> c(n);
      for (std::size_t t = 0; t < n; ++t) c[t] = std::cos(2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / static_cast<double>(n));
      tone_err = std::max(tone_err, std::abs(monitor::dft(c, 1.0).magnitudes[5] - static_cast<double>(n) / 2.0));
    }
  }
  return {worst_bin <= 1e-9 && worst_parseval <= 1e-6 && tone_err <= 1e-9,
          fmt("max bin error vs naive DFT %.2e; Parseval rel err %.2e; bin-5 tone error %.2e", worst_bin, worst_parseval,
              tone_err),
          {}};
}

// ---- A8 ----------------------------------------------------------------------

Verdict checkout() {
  const auto cfg = config::default_config();
  const auto& st = cfg.station;
  const double analytic = st.recognition_success_prob * st.smart_checkout_mean +
                          (1.0 - st.recognition_success_prob) * st.manual_checkout_mean;
  auto mean_checkout = [&](sim::CheckoutMode mode, std::int64_t& n) {
    sim::SimConfig sc = cfg.sim_config();
    sc.station.checkout_mode = mode;
    pricing::BaselinePolicy p(pricing::BaselineKind::fixed_margin);
    const auto log = app::pricing_episode(sc, p, cfg.horizon_hours());
    conservation.check(log);
    ops::KpiReport k = ops::emit_kpi_report(log, {0, cfg.horizon_hours()}, {});
    n = k.checkouts;
    return k.mean_checkout_seconds();
  };
  std::int64_t n_smart = 0, n_manual = 0;
  const double smart = mean_checkout(sim::CheckoutMode::smart, n_smart);
  const double manual = mean_checkout(sim::CheckoutMode::manual, n_manual);
  const double rel = std::abs(smart - 57.0) / 57.0;
  return {rel <= 0.02 && std::abs(analytic - 57.0) / 57.0 <= 0.001,
          fmt("smart mean %.3fs vs 57.0s (%.2f%% off, analytic %.3fs, %lld checkouts); manual %.1fs; smart/manual %.1f%%",
              smart, 100.0 * rel, analytic, static_cast<long long>(n_smart), manual, 100.0 * smart / manual),
          {}};
}

// ---- A9 ----------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FUELSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::int64_t random_wire_int(Rng64& rng) {
  switch (rng.below(3)) {
    case 0: return static_cast<std::int64_t>(rng.below(1000));
    case 1: return -static_cast<std::int64_t>(rng.below(1'000'000'000));
    default: return static_cast<std::int64_t>(rng.next());
  }
}

int round_trip_failures(int count) {
  using namespace telemetry;
  Rng64 rng{99};
  int bad = 0;
  for (int i = 0; i < count; ++i) {
    TelemetryRecord r;
    r.seq = i;
    r.t = static_cast<std::int64_t>(rng.below(1 << 20));
    r.stream = static_cast<Stream>(i % kStreams);
    for (const FieldSpec& f : schema(r.stream)) {
      if (f.type == FieldType::integer) {
        r.payload.emplace_back(random_wire_int(rng));
      } else if (f.type == FieldType::string) {
        std::string s;
        for (std::uint64_t j = 0, n = rng.below(10); j < n; ++j) s += static_cast<char>('a' + rng.below(26));
        r.payload.emplace_back(s);
      } else {
        std::vector<std::int64_t> a(rng.below(5));
        for (auto& x : a) x = random_wire_int(rng);
        r.payload.emplace_back(a);
      }
    }
    const std::string line = encode_record(r);
    const auto back = decode_record(line);
    if (!(back == r) || encode_record(back) != line) ++bad;
  }
  return bad;
}

Verdict determinism_and_replay() {
  const fs::path dir = fs::temp_directory_path() / "fuelsim_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "scenario.json";
  std::ofstream(cfg_path) << "{}\n";  // the default scenario, greedy pricing trained in-run

  int identical = 0, replay_ok = 0, logs = 0;
  const auto cfg = config::default_config();
  for (const char* policy : {"greedy", "fixed_margin", "competitor_match"}) {
    const fs::path a = dir / (std::string(policy) + "_a"), b = dir / (std::string(policy) + "_b");
    const std::string base = "simulate --config " + cfg_path.string() + " --policy " + policy + " --out ";
    if (run_cli(base + a.string()) != 0 || run_cli(base + b.string()) != 0) continue;
    const auto bytes = telemetry::read_file(a / "events.ndx");
    if (bytes == telemetry::read_file(b / "events.ndx")) ++identical;
    for (const fs::path& run : {a, b}) {
      ++logs;
      if (run_cli("replay --log " + (run / "events.ndx").string() + " --out " + (run / "replay").string()) == 0) ++replay_ok;
    }
    const auto rep = telemetry::replay_bytes(bytes);
    conservation.check(rep.log);
  }
  const int rt_bad = round_trip_failures(10000);
  fs::remove_all(dir);
  return {identical == 3 && replay_ok == logs && logs == 6 && rt_bad == 0,
          fmt("identical events.ndx for %d/3 policies; replay exit 0 on %d/%d logs; round-trip failures %d/10000 (%d days each)",
              identical, replay_ok, logs, rt_bad, cfg.horizon_days),
          {}};
}

}  // namespace

int main() {
  std::printf("fuelsim acceptance\n");
  criterion("A1", "pricing uplift", 300, pricing_uplift);
  criterion("A2", "q-learning toy MDP", 1, toy_mdp);
  criterion("A3", "forecasting", 60, forecasting);
  criterion("A4", "inventory", 120, inventory);
  criterion("A5", "recommender", 60, recommender_checks);
  criterion("A6", "leak detection", 60, leak_detection);
  criterion("A7", "fft", 10, fft_checks);
  criterion("A8", "checkout", 10, checkout);
  criterion("A9", "determinism & replay", 60, determinism_and_replay);
  criterion("A10", "conservation", 0, [] {
    return Verdict{conservation.violations == 0 && conservation.runs > 0,
                   fmt("tank balance exact on %d/%d acceptance episodes", conservation.runs - conservation.violations,
                       conservation.runs),
                   {}};
  });
  std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
