#ifndef FUELSIM_PRICING_QLEARNING_HPP
#define FUELSIM_PRICING_QLEARNING_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/core/rng.hpp"
#include "fuelsim/sim/demand.hpp"
#include "fuelsim/sim/episode.hpp"

namespace fuelsim::pricing {

enum class DemandBucket { low, medium, high };
enum class CompDeltaBucket { cheaper, par, pricier };
enum class WeatherBucket { mild, adverse };

inline constexpr int kStates = 3 * 3 * 4 * 2;
inline constexpr int kActions = 3;
inline constexpr std::array<int, kActions> kActionDeltaCents{-1, 0, +1};

inline constexpr double kDemandLowRatio = 0.67;
inline constexpr double kDemandHighRatio = 1.33;
inline constexpr std::int64_t kParBandCents = 2;
// Training episodes open at a random offset from the competitor so the table also
// learns its way back from gaps the ±1 cent walk alone would rarely reach.
inline constexpr std::int64_t kStartOffsetMinCents = -20;
inline constexpr std::int64_t kStartOffsetMaxCents = 150;
inline constexpr double kAdverseWeather = 0.5;

struct PriceState {
  DemandBucket demand = DemandBucket::medium;
  CompDeltaBucket comp = CompDeltaBucket::par;
  sim::Daypart daypart = sim::Daypart::night;
  WeatherBucket weather = WeatherBucket::mild;

  int index() const {
    return ((static_cast<int>(demand) * 3 + static_cast<int>(comp)) * 4 + static_cast<int>(daypart)) * 2 +
           static_cast<int>(weather);
  }
  static PriceState from_index(int i) {
    PriceState s;
    s.weather = static_cast<WeatherBucket>(i % 2);
    i /= 2;
    s.daypart = static_cast<sim::Daypart>(i % 4);
    i /= 4;
    s.comp = static_cast<CompDeltaBucket>(i % 3);
    s.demand = static_cast<DemandBucket>(i / 3);
    return s;
  }
  bool operator==(const PriceState&) const = default;
};

/// Buckets the market the agent sees. Demand is judged against the daypart's base
/// rate; the competitor comparison uses a ±2 cent par band.
inline PriceState discretize_state(double demand_rate, Price posted, const sim::ExogenousState& exo,
                                   const sim::StationParams& params) {
  PriceState s;
  const double base = sim::base_daypart_rate(exo.hour_of_day, params);
  if (demand_rate < kDemandLowRatio * base)
    s.demand = DemandBucket::low;
  else if (demand_rate > kDemandHighRatio * base)
    s.demand = DemandBucket::high;
  const std::int64_t delta = (posted - exo.competitor_cents()).raw;
  if (delta < -kParBandCents)
    s.comp = CompDeltaBucket::cheaper;
  else if (delta > kParBandCents)
    s.comp = CompDeltaBucket::pricier;
  s.daypart = sim::daypart_of(exo.hour_of_day);
  s.weather = exo.weather_index >= kAdverseWeather ? WeatherBucket::adverse : WeatherBucket::mild;
  return s;
}

struct RewardWeights {
  double revenue = 1.0;
  double volume = 0.0;
  double retention = 5.0;
};

/// Margin (not gross revenue) plus volume and retention terms.
inline double reward(double margin_dollars, double volume_gallons, double retention_delta, const RewardWeights& w) {
  return w.revenue * margin_dollars + w.volume * volume_gallons + w.retention * retention_delta;
}

struct QLearnParams {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon_start = 0.3;
  double epsilon_end = 0.01;
  int epsilon_decay_episodes = 240;
  int episodes = 300;
  int episode_days = 30;
  RewardWeights weights{};
};

inline void validate(const QLearnParams& p) {
  auto req = [](bool ok, const char* f, const char* w) {
    if (!ok) throw ConfigError(f, w);
  };
  req(p.alpha > 0.0 && p.alpha <= 1.0, "alpha", "must be in (0,1]");
  req(p.gamma >= 0.0 && p.gamma < 1.0, "gamma", "must be in [0,1)");
  req(p.epsilon_start >= 0.0 && p.epsilon_start <= 1.0, "epsilon_start", "must be in [0,1]");
  req(p.epsilon_end >= 0.0 && p.epsilon_end <= 1.0, "epsilon_end", "must be in [0,1]");
  req(p.epsilon_end <= p.epsilon_start, "epsilon_end", "must be <= epsilon_start");
  req(p.epsilon_decay_episodes >= 0, "epsilon_decay_episodes", "must be >= 0");
  req(p.episodes >= 0, "episodes", "must be >= 0");
  req(p.episode_days >= 1, "episode_days", "must be >= 1");
  req(p.weights.revenue >= 0.0 && p.weights.volume >= 0.0 && p.weights.retention >= 0.0, "reward_weights",
      "weights must be >= 0");
}

struct QTable {
  std::array<std::array<double, kActions>, kStates> values{};
  std::array<std::array<std::int64_t, kActions>, kStates> visits{};

  double max_value(int s) const {
    const auto& row = values[static_cast<std::size_t>(s)];
    return std::max(row[0], std::max(row[1], row[2]));
  }
  /// Lowest delta wins ties.
  int greedy_action(int s) const {
    const auto& row = values[static_cast<std::size_t>(s)];
    int best = 0;
    for (int a = 1; a < kActions; ++a)
      if (row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(best)]) best = a;
    return best;
  }
  bool operator==(const QTable&) const = default;
};

/// One temporal-difference step toward r + γ max_a' Q(s', a').
inline void q_update(QTable& q, int s, int a, double r, int s_next, double alpha, double gamma) {
  double& cell = q.values[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
  const double target = r + gamma * q.max_value(s_next);
  cell += alpha * (target - cell);
  ++q.visits[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
}

inline int select_action(const QTable& q, int s, double epsilon, Rng64& rng) {
  if (rng.uniform() < epsilon) return static_cast<int>(rng.below(kActions));
  return q.greedy_action(s);
}

inline Price apply_action(Price previous, int action) {
  return previous + Price{kActionDeltaCents[static_cast<std::size_t>(action)]};
}

/// Epsilon for a 0-based episode index under linear decay.
inline double epsilon_at(const QLearnParams& p, int episode) {
  if (p.epsilon_decay_episodes <= 0) return p.epsilon_end;
  const double f = std::min(1.0, static_cast<double>(episode) / p.epsilon_decay_episodes);
  return p.epsilon_start * (1.0 - f) + p.epsilon_end * f;
}

/// Pricing policy backed by a Q-table. With `learn` set it explores and updates the
/// table it was given; otherwise it exploits a read-only snapshot.
class QPolicy final : public sim::PricingPolicy {
 public:
  QPolicy(QTable& table, const QLearnParams& params, double epsilon, Rng64 rng, bool learn,
          std::optional<Price> start_offset = std::nullopt)
      : table_(&table), params_(params), epsilon_(epsilon), rng_(rng), learn_(learn), start_offset_(start_offset) {}

  Price post(const sim::PricingContext& ctx) override {
    Price previous = ctx.previous_price;
    double demand = ctx.demand_at_previous;
    if (start_offset_) {
      previous = ctx.exo.competitor_cents() + *start_offset_;
      demand = sim::demand_rate(previous, ctx.exo, ctx.params);
      start_offset_.reset();
    }
    const int s = discretize_state(demand, previous, ctx.exo, ctx.params).index();
    if (learn_ && has_pending_) q_update(*table_, last_state_, last_action_, last_reward_, s, params_.alpha, params_.gamma);
    const int a = learn_ ? select_action(*table_, s, epsilon_, rng_) : table_->greedy_action(s);
    last_state_ = s;
    last_action_ = a;
    has_pending_ = false;
    return apply_action(previous, a);
  }

  void observe(const sim::HourRecord& rec, double retention_delta) override {
    last_reward_ = reward(to_dollars(rec.margin()), to_gallons(rec.gallons_sold), retention_delta, params_.weights);
    total_reward_ += last_reward_;
    has_pending_ = true;
  }

  double total_reward() const { return total_reward_; }

 private:
  QTable* table_;
  QLearnParams params_;
  double epsilon_;
  Rng64 rng_;
  bool learn_;
  std::optional<Price> start_offset_;
  bool has_pending_ = false;
  int last_state_ = 0;
  int last_action_ = 0;
  double last_reward_ = 0.0;
  double total_reward_ = 0.0;
};

/// Read-only greedy policy over its own copy of a trained table.
class GreedyPolicy final : public sim::PricingPolicy {
 public:
  explicit GreedyPolicy(QTable snapshot) : table_(std::move(snapshot)) {}

  Price post(const sim::PricingContext& ctx) override {
    const int s = discretize_state(ctx.demand_at_previous, ctx.previous_price, ctx.exo, ctx.params).index();
    return apply_action(ctx.previous_price, table_.greedy_action(s));
  }

  void refresh(const QTable& snapshot) { table_ = snapshot; }
  const QTable& table() const { return table_; }

 private:
  QTable table_;
};

enum class BaselineKind { fixed_margin, competitor_match };

inline constexpr std::int64_t kFixedMarginCents = 25;

class BaselinePolicy final : public sim::PricingPolicy {
 public:
  explicit BaselinePolicy(BaselineKind kind) : kind_(kind) {}
  Price post(const sim::PricingContext& ctx) override {
    if (kind_ == BaselineKind::fixed_margin) return ctx.exo.wholesale_cents() + Price{kFixedMarginCents};
    return ctx.exo.competitor_cents();
  }

 private:
  BaselineKind kind_;
};

inline BaselinePolicy baseline_policy(BaselineKind kind) { return BaselinePolicy(kind); }

struct TrainingPoint {
  int episode = 0;
  double total_reward = 0.0;
  double epsilon = 0.0;
};

struct TrainingResult {
  QTable table;
  std::vector<TrainingPoint> curve;
};

/// Seed of training episode `e`, derived from the scenario seed.
inline std::uint64_t training_seed(std::uint64_t seed, int episode) {
  return Rng64{seed ^ 0x7A3C5E1F00000000ULL}.fork(static_cast<std::uint64_t>(episode) + 1).next();
}

/// Keeps the tank topped up each day so the pricing signal is not mixed with stockouts.
class DailyTopUp final : public sim::InventoryPolicy {
 public:
  std::optional<Volume> decide(const sim::InventoryView& v) override {
    if (v.pending.raw > 0) return std::nullopt;
    return v.capacity - v.level;
  }
};

inline TrainingResult train_policy(const sim::SimConfig& config, const QLearnParams& params) {
  validate(params);
  TrainingResult result;
  for (int e = 0; e < params.episodes; ++e) {
    sim::SimConfig ep = config;
    ep.seed = training_seed(config.seed, e);
    const double eps = epsilon_at(params, e);
    Rng64 start_rng = Rng64{ep.seed}.fork(12);
    const Price offset{kStartOffsetMinCents +
                       static_cast<std::int64_t>(start_rng.below(kStartOffsetMaxCents - kStartOffsetMinCents + 1))};
    QPolicy learner(result.table, params, eps, Rng64{ep.seed}.fork(11), true, offset);
    DailyTopUp inventory;
    sim::run_episode(ep, learner, inventory, static_cast<std::int64_t>(params.episode_days) * sim::kHoursPerDay);
    result.curve.push_back({e, learner.total_reward(), eps});
  }
  return result;
}

inline void write_qtable_csv(std::ostream& os, const QTable& q) {
  os << "state_index,q_down,q_hold,q_up,visits_down,visits_hold,visits_up\n";
  char buf[256];
  for (int s = 0; s < kStates; ++s) {
    const auto& v = q.values[static_cast<std::size_t>(s)];
    const auto& n = q.visits[static_cast<std::size_t>(s)];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%lld,%lld,%lld\n", s, v[0], v[1], v[2],
                  static_cast<long long>(n[0]), static_cast<long long>(n[1]), static_cast<long long>(n[2]));
    os << buf;
  }
}

inline QTable read_qtable_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "state_index,q_down,q_hold,q_up,visits_down,visits_hold,visits_up")
    throw Error("qtable csv: bad header");
  QTable q;
  for (int s = 0; s < kStates; ++s) {
    if (!std::getline(is, line)) throw Error("qtable csv: expected 72 rows");
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7 || std::stoi(cells[0]) != s) throw Error("qtable csv: malformed row " + std::to_string(s));
    for (int a = 0; a < kActions; ++a) {
      q.values[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = std::stod(cells[static_cast<std::size_t>(1 + a)]);
      q.visits[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = std::stoll(cells[static_cast<std::size_t>(4 + a)]);
    }
  }
  return q;
}

inline void write_training_curve_csv(std::ostream& os, const std::vector<TrainingPoint>& curve) {
  os << "episode,total_reward,epsilon\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", p.episode, p.total_reward, p.epsilon);
    os << buf;
  }
}

}  // namespace fuelsim::pricing

#endif  // FUELSIM_PRICING_QLEARNING_HPP
