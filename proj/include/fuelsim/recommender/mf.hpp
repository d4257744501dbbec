#ifndef FUELSIM_RECOMMENDER_MF_HPP
#define FUELSIM_RECOMMENDER_MF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/core/rng.hpp"
#include "fuelsim/sim/world.hpp"

namespace fuelsim::recommender {

struct Interaction {
  int user = 0;
  int item = 0;
  double rating = 0.0;
  bool operator==(const Interaction&) const = default;
};

/// Observed (user, item) ratings; unobserved pairs are simply absent.
struct InteractionMatrix {
  int n_users = 0;
  int n_items = 0;
  std::vector<Interaction> entries;

  void validate() const {
    if (n_users < 1 || n_items < 1) throw Error("interactions: dimensions must be >= 1");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : entries) {
      if (e.user < 0 || e.user >= n_users || e.item < 0 || e.item >= n_items)
        throw Error("interactions: entry (" + std::to_string(e.user) + ", " + std::to_string(e.item) + ") out of range");
      if (!std::isfinite(e.rating) || e.rating < 0.0) throw Error("interactions: rating must be finite and >= 0");
      if (!seen.emplace(e.user, e.item).second)
        throw Error("interactions: duplicate pair (" + std::to_string(e.user) + ", " + std::to_string(e.item) + ")");
    }
  }
};

/// rating = ln(1 + purchase count) per (user, item), in (user, item) order.
inline InteractionMatrix from_counts(int n_users, int n_items, const std::map<std::pair<int, int>, std::int64_t>& counts) {
  InteractionMatrix m{n_users, n_items, {}};
  for (const auto& [key, c] : counts)
    if (c > 0) m.entries.push_back({key.first, key.second, std::log1p(static_cast<double>(c))});
  m.validate();
  return m;
}

/// Purchase counts of repeat customers (ids in [0, n_users)) from visit baskets.
inline InteractionMatrix interactions_from_visits(std::span<const sim::CustomerVisit> visits, int n_users, int n_items) {
  std::map<std::pair<int, int>, std::int64_t> counts;
  for (const auto& v : visits) {
    if (v.user_id < 0 || v.user_id >= n_users) continue;
    for (int item : v.basket) {
      if (item < 0 || item >= n_items) throw Error("interactions: basket item " + std::to_string(item) + " out of range");
      ++counts[{static_cast<int>(v.user_id), item}];
    }
  }
  return from_counts(n_users, n_items, counts);
}

struct LatentFactors {
  int n_users = 0;
  int n_items = 0;
  int k = 1;
  double reg_lambda = 0.0;
  std::vector<double> U;  // n_users x k, row-major
  std::vector<double> V;  // n_items x k, row-major

  std::span<double> u(int i) { return {U.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(k), static_cast<std::size_t>(k)}; }
  std::span<double> v(int j) { return {V.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(k), static_cast<std::size_t>(k)}; }
  std::span<const double> u(int i) const { return {U.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(k), static_cast<std::size_t>(k)}; }
  std::span<const double> v(int j) const { return {V.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(k), static_cast<std::size_t>(k)}; }

  bool operator==(const LatentFactors&) const = default;
};

inline LatentFactors init_factors(int n_users, int n_items, int k, Rng64& rng) {
  if (n_users < 1 || n_items < 1 || k < 1) throw Error("init_factors: dimensions must be >= 1");
  LatentFactors f{n_users, n_items, k, 0.0, {}, {}};
  f.U.resize(static_cast<std::size_t>(n_users) * static_cast<std::size_t>(k));
  f.V.resize(static_cast<std::size_t>(n_items) * static_cast<std::size_t>(k));
  for (double& x : f.U) x = rng.uniform(-0.1, 0.1);
  for (double& x : f.V) x = rng.uniform(-0.1, 0.1);
  return f;
}

inline double predict_rating(const LatentFactors& f, int i, int j) {
  if (i < 0 || i >= f.n_users) throw Error("predict_rating: user " + std::to_string(i) + " out of range");
  if (j < 0 || j >= f.n_items) throw Error("predict_rating: item " + std::to_string(j) + " out of range");
  const auto a = f.u(i);
  const auto b = f.v(j);
  double s = 0.0;
  for (int c = 0; c < f.k; ++c) s += a[static_cast<std::size_t>(c)] * b[static_cast<std::size_t>(c)];
  return s;
}

/// Σ over observed (i, j) of (r − U_i·V_j)² + λ(‖U_i‖² + ‖V_j‖²). Each factor row is
/// penalized once per observed entry it takes part in; this is the objective the
/// per-entry SGD update descends.
inline double training_loss(const InteractionMatrix& m, const LatentFactors& f, double lambda) {
  double loss = 0.0;
  for (const auto& e : m.entries) {
    const double err = e.rating - predict_rating(f, e.user, e.item);
    double norms = 0.0;
    for (double x : f.u(e.user)) norms += x * x;
    for (double x : f.v(e.item)) norms += x * x;
    loss += err * err + lambda * norms;
  }
  return loss;
}

struct FactorGradient {
  std::vector<double> dU;
  std::vector<double> dV;
};

/// Full-batch gradient of training_loss.
inline FactorGradient loss_gradient(const InteractionMatrix& m, const LatentFactors& f, double lambda) {
  FactorGradient g{std::vector<double>(f.U.size(), 0.0), std::vector<double>(f.V.size(), 0.0)};
  const auto k = static_cast<std::size_t>(f.k);
  for (const auto& e : m.entries) {
    const double err = e.rating - predict_rating(f, e.user, e.item);
    const auto ui = static_cast<std::size_t>(e.user) * k;
    const auto vj = static_cast<std::size_t>(e.item) * k;
    for (std::size_t c = 0; c < k; ++c) {
      g.dU[ui + c] += -2.0 * err * f.V[vj + c] + 2.0 * lambda * f.U[ui + c];
      g.dV[vj + c] += -2.0 * err * f.U[ui + c] + 2.0 * lambda * f.V[vj + c];
    }
  }
  return g;
}

struct MfParams {
  int k = 8;
  double reg_lambda = 0.05;
  double learning_rate = 0.01;
  int epochs = 200;
};

inline void validate(const MfParams& p) {
  if (p.k < 1) throw ConfigError("k", "must be >= 1");
  if (!(p.reg_lambda >= 0.0)) throw ConfigError("reg_lambda", "must be >= 0");
  if (!(p.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (p.epochs < 0) throw ConfigError("epochs", "must be >= 0");
}

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, double loss)
      : Error("train_mf: diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(loss) + ")"),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

inline constexpr double kDivergenceLoss = 1e12;

struct MfResult {
  LatentFactors factors;
  std::vector<double> loss;  // training_loss after each epoch
};

/// SGD from the given starting factors. Each epoch visits every observed entry
/// once in an order reshuffled from `rng`.
inline MfResult train_mf_from(const InteractionMatrix& m, LatentFactors start, const MfParams& p, Rng64& rng) {
  validate(p);
  m.validate();
  if (m.entries.empty()) throw Error("train_mf: no observed entries");
  if (start.n_users != m.n_users || start.n_items != m.n_items || start.k != p.k)
    throw Error("train_mf: starting factors do not match the interaction shape");
  MfResult r{std::move(start), {}};
  LatentFactors& f = r.factors;
  f.reg_lambda = p.reg_lambda;
  std::vector<std::size_t> order(m.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto k = static_cast<std::size_t>(p.k);
  const double lr = p.learning_rate;
  const double lambda = p.reg_lambda;
  for (int epoch = 1; epoch <= p.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t idx : order) {
      const Interaction& e = m.entries[idx];
      auto ui = f.u(e.user);
      auto vj = f.v(e.item);
      double dot = 0.0;
      for (std::size_t c = 0; c < k; ++c) dot += ui[c] * vj[c];
      const double err = e.rating - dot;
      for (std::size_t c = 0; c < k; ++c) {
        const double uc = ui[c];
        const double vc = vj[c];
        ui[c] += lr * (err * vc - lambda * uc);
        vj[c] += lr * (err * uc - lambda * vc);
      }
    }
    const double loss = training_loss(m, f, lambda);
    if (!std::isfinite(loss) || loss > kDivergenceLoss) throw DivergenceError(epoch, loss);
    r.loss.push_back(loss);
  }
  return r;
}

/// Initializes from `rng` and then trains with the same stream.
inline MfResult train_mf(const InteractionMatrix& m, const MfParams& p, Rng64& rng) {
  validate(p);
  LatentFactors start = init_factors(m.n_users, m.n_items, p.k, rng);
  return train_mf_from(m, std::move(start), p, rng);
}

/// Items outside `exclude`, best predicted rating first, ties to the lower index.
inline std::vector<int> recommend_top_k(const LatentFactors& f, int user, int k_items, const std::set<int>& exclude = {}) {
  if (user < 0 || user >= f.n_users) throw Error("recommend_top_k: user " + std::to_string(user) + " out of range");
  std::vector<std::pair<double, int>> scored;
  for (int j = 0; j < f.n_items; ++j)
    if (!exclude.contains(j)) scored.emplace_back(predict_rating(f, user, j), j);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out;
  const std::size_t n = std::min(scored.size(), static_cast<std::size_t>(std::max(0, k_items)));
  for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
  return out;
}

inline std::set<int> purchased_items(const InteractionMatrix& m, int user) {
  std::set<int> s;
  for (const auto& e : m.entries)
    if (e.user == user) s.insert(e.item);
  return s;
}

inline double rmse_holdout(const LatentFactors& f, std::span<const Interaction> holdout) {
  if (holdout.empty()) throw Error("rmse_holdout: empty holdout");
  double ss = 0.0;
  for (const auto& e : holdout) {
    const double err = e.rating - predict_rating(f, e.user, e.item);
    ss += err * err;
  }
  return std::sqrt(ss / static_cast<double>(holdout.size()));
}

/// RMSE of predicting every held-out entry with the training mean.
inline double global_mean_rmse(const InteractionMatrix& train, std::span<const Interaction> holdout) {
  if (holdout.empty()) throw Error("rmse_holdout: empty holdout");
  if (train.entries.empty()) throw Error("global_mean_rmse: empty training set");
  double mean = 0.0;
  for (const auto& e : train.entries) mean += e.rating;
  mean /= static_cast<double>(train.entries.size());
  double ss = 0.0;
  for (const auto& e : holdout) ss += (e.rating - mean) * (e.rating - mean);
  return std::sqrt(ss / static_cast<double>(holdout.size()));
}

struct HoldoutSplit {
  InteractionMatrix train;
  std::vector<Interaction> holdout;
};

/// Seeded random split; `fraction` of entries go to the holdout.
inline HoldoutSplit split_holdout(const InteractionMatrix& m, double fraction, Rng64& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split_holdout: fraction must be in (0, 1)");
  std::vector<Interaction> shuffled = m.entries;
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(shuffled.size())));
  HoldoutSplit s{{m.n_users, m.n_items, {}}, {}};
  s.holdout.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_hold));
  s.train.entries.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_hold), shuffled.end());
  auto by_pair = [](const Interaction& a, const Interaction& b) { return std::tie(a.user, a.item) < std::tie(b.user, b.item); };
  std::sort(s.holdout.begin(), s.holdout.end(), by_pair);
  std::sort(s.train.entries.begin(), s.train.entries.end(), by_pair);
  return s;
}

/// Low-rank synthetic ratings used to exercise the trainer: positive rank-3
/// ground truth, about half the pairs observed.
inline InteractionMatrix synthetic_interactions(int n_users = 30, int n_items = 20, std::uint64_t seed = 7) {
  Rng64 rng{seed};
  const int rank = 3;
  std::vector<double> a(static_cast<std::size_t>(n_users * rank)), b(static_cast<std::size_t>(n_items * rank));
  for (double& x : a) x = rng.uniform(0.2, 1.0);
  for (double& x : b) x = rng.uniform(0.2, 1.0);
  InteractionMatrix m{n_users, n_items, {}};
  for (int i = 0; i < n_users; ++i)
    for (int j = 0; j < n_items; ++j) {
      if (!rng.bernoulli(0.5)) continue;
      double r = 0.0;
      for (int c = 0; c < rank; ++c) r += a[static_cast<std::size_t>(i * rank + c)] * b[static_cast<std::size_t>(j * rank + c)];
      m.entries.push_back({i, j, r});
    }
  return m;
}

// ---- CSV ---------------------------------------------------------------------

/// Rows of "matrix,row,f0,...,f{k-1}" with matrix U then V.
inline void write_factors_csv(std::ostream& os, const LatentFactors& f) {
  os << "matrix,row";
  for (int c = 0; c < f.k; ++c) os << ",f" << c;
  os << '\n';
  char buf[32];
  auto rows = [&](const char* name, int n, auto get) {
    for (int r = 0; r < n; ++r) {
      os << name << ',' << r;
      for (double x : get(r)) {
        std::snprintf(buf, sizeof buf, ",%.17g", x);
        os << buf;
      }
      os << '\n';
    }
  };
  rows("U", f.n_users, [&](int r) { return f.u(r); });
  rows("V", f.n_items, [&](int r) { return f.v(r); });
}

inline LatentFactors read_factors_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("matrix,row", 0) != 0) throw Error("factors csv: bad header");
  LatentFactors f;
  f.k = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 1;
  if (f.k < 1) throw Error("factors csv: no factor columns");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != static_cast<std::size_t>(f.k) + 2) throw Error("factors csv: malformed row '" + line + "'");
    std::vector<double>* dst = cells[0] == "U" ? &f.U : cells[0] == "V" ? &f.V : nullptr;
    if (!dst) throw Error("factors csv: unknown matrix '" + cells[0] + "'");
    const int expect = static_cast<int>(dst->size()) / f.k;
    if (std::stoi(cells[1]) != expect) throw Error("factors csv: rows out of order");
    for (int c = 0; c < f.k; ++c) dst->push_back(std::stod(cells[static_cast<std::size_t>(c) + 2]));
  }
  f.n_users = static_cast<int>(f.U.size()) / f.k;
  f.n_items = static_cast<int>(f.V.size()) / f.k;
  return f;
}

/// Predicted rating grid: one row per user, one column per item.
inline void write_heatmap_csv(std::ostream& os, const LatentFactors& f) {
  os << "user";
  for (int j = 0; j < f.n_items; ++j) os << ",item_" << j;
  os << '\n';
  char buf[32];
  for (int i = 0; i < f.n_users; ++i) {
    os << i;
    for (int j = 0; j < f.n_items; ++j) {
      std::snprintf(buf, sizeof buf, ",%.6f", predict_rating(f, i, j));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace fuelsim::recommender

#endif  // FUELSIM_RECOMMENDER_MF_HPP
