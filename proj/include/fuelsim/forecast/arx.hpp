#ifndef FUELSIM_FORECAST_ARX_HPP
#define FUELSIM_FORECAST_ARX_HPP

// Linear autoregressive forecaster with exogenous inputs:
//
//   y_t = sum_k a_k y_{t-k} + b . X_t + c
//
// fitted by ridge-penalised least squares (the intercept is not penalised).
// X_t encodes weather, traffic, competitor price, hour-of-day and day-of-week
// dummies (reference level hour 0 / day 0 dropped) and the event flag.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/forecast/linalg.hpp"
#include "fuelsim/sim/params.hpp"

namespace fuelsim::forecast {

inline constexpr std::size_t kExogenousFeatures = 33;

inline void encode_exogenous(const sim::ExogenousState& x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = x.weather_index;
  out[1] = x.traffic_index;
  out[2] = x.competitor_price;
  if (x.hour_of_day > 0) out[3 + static_cast<std::size_t>(x.hour_of_day - 1)] = 1.0;
  if (x.day_of_week > 0) out[26 + static_cast<std::size_t>(x.day_of_week - 1)] = 1.0;
  out[32] = x.event_flag ? 1.0 : 0.0;
}

inline std::size_t feature_count(std::size_t n_lags) { return n_lags + kExogenousFeatures + 1; }

struct Design {
  Matrix features;
  std::vector<double> targets;
  std::size_t n_lags = 0;
};

/// Row i describes time t = n_lags + i: [y_{t-1} .. y_{t-n}, X_t, 1] with target y_t.
inline Design build_features(std::span<const double> history, std::span<const sim::ExogenousState> exo,
                             std::size_t n_lags) {
  if (n_lags < 1) throw Error("build_features: n_lags must be >= 1");
  if (history.size() <= n_lags)
    throw Error("build_features: history has " + std::to_string(history.size()) + " points, need at least " +
                std::to_string(n_lags + 1));
  if (exo.size() != history.size()) throw Error("build_features: exogenous series length differs from history");
  Design d;
  d.n_lags = n_lags;
  const std::size_t rows = history.size() - n_lags;
  d.features = Matrix(rows, feature_count(n_lags));
  d.targets.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t t = n_lags + i;
    auto row = d.features.row(i);
    for (std::size_t k = 0; k < n_lags; ++k) row[k] = history[t - 1 - k];
    encode_exogenous(exo[t], row.subspan(n_lags, kExogenousFeatures));
    row[n_lags + kExogenousFeatures] = 1.0;
    d.targets[i] = history[t];
  }
  return d;
}

struct ForecastModel {
  std::size_t n_lags = 0;
  std::vector<double> lag_coeffs;
  std::vector<double> exo_coeffs;
  double intercept = 0.0;
  double ridge_lambda = 0.0;

  std::vector<double> coefficients() const {
    std::vector<double> w = lag_coeffs;
    w.insert(w.end(), exo_coeffs.begin(), exo_coeffs.end());
    w.push_back(intercept);
    return w;
  }

  /// Raw linear combination on one encoded feature row (no clamping).
  double evaluate(std::span<const double> row) const {
    double s = intercept;
    for (std::size_t k = 0; k < n_lags; ++k) s += lag_coeffs[k] * row[k];
    for (std::size_t j = 0; j < kExogenousFeatures; ++j) s += exo_coeffs[j] * row[n_lags + j];
    return s;
  }
};

inline ForecastModel model_from_coefficients(std::span<const double> w, std::size_t n_lags, double lambda) {
  if (w.size() != feature_count(n_lags)) throw Error("coefficient vector length mismatch");
  for (double v : w)
    if (!std::isfinite(v)) throw Error("fit_arx: non-finite coefficient");
  ForecastModel m;
  m.n_lags = n_lags;
  m.lag_coeffs.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n_lags));
  m.exo_coeffs.assign(w.begin() + static_cast<std::ptrdiff_t>(n_lags),
                      w.begin() + static_cast<std::ptrdiff_t>(n_lags + kExogenousFeatures));
  m.intercept = w.back();
  m.ridge_lambda = lambda;
  return m;
}

/// Ridge solve of (AᵀA + λI)w = Aᵀy over rows [first, last); the intercept column is not penalised.
inline ForecastModel fit_arx_rows(const Design& d, std::size_t first, std::size_t last, double ridge_lambda) {
  if (ridge_lambda < 0.0 || !std::isfinite(ridge_lambda)) throw Error("fit_arx: ridge_lambda must be >= 0");
  if (last <= first) throw Error("fit_arx: no rows to fit");
  const std::size_t cols = d.features.cols;
  if (ridge_lambda == 0.0 && last - first < cols)
    throw RankDeficientError(last - first);
  Matrix ata;
  std::vector<double> aty;
  normal_equations(d.features, d.targets, first, last, ata, aty);
  for (std::size_t i = 0; i + 1 < cols; ++i) ata(i, i) += ridge_lambda;
  return model_from_coefficients(cholesky_solve(std::move(ata), std::move(aty)), d.n_lags, ridge_lambda);
}

inline ForecastModel fit_arx(const Design& d, double ridge_lambda) {
  return fit_arx_rows(d, 0, d.features.rows, ridge_lambda);
}

inline double penalized_loss(const ForecastModel& m, const Design& d) {
  double loss = 0.0;
  for (std::size_t r = 0; r < d.features.rows; ++r) {
    const double e = d.targets[r] - m.evaluate(d.features.row(r));
    loss += e * e;
  }
  double pen = 0.0;
  for (double a : m.lag_coeffs) pen += a * a;
  for (double b : m.exo_coeffs) pen += b * b;
  return loss + m.ridge_lambda * pen;
}

/// One-step prediction from the most recent history (last element is y_{t-1}), clamped at zero.
inline double predict_next(const ForecastModel& m, std::span<const double> recent, const sim::ExogenousState& next) {
  if (recent.size() < m.n_lags)
    throw Error("predict_next: need " + std::to_string(m.n_lags) + " recent points, got " +
                std::to_string(recent.size()));
  std::vector<double> row(feature_count(m.n_lags));
  for (std::size_t k = 0; k < m.n_lags; ++k) row[k] = recent[recent.size() - 1 - k];
  encode_exogenous(next, std::span<double>(row).subspan(m.n_lags, kExogenousFeatures));
  row.back() = 1.0;
  return std::max(0.0, m.evaluate(row));
}

/// Mean squared error over paired points.
inline double mse(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw Error("mse: length mismatch");
  if (actual.empty()) throw Error("mse: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    s += e * e;
  }
  return s / static_cast<double>(actual.size());
}

inline double mae(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw Error("mae: length mismatch");
  if (actual.empty()) throw Error("mae: empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

struct ForecastMetrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t n_points = 0;
  std::size_t window_start = 0;  // time index of the first predicted point
};

struct BacktestResult {
  std::vector<ForecastMetrics> arx;
  std::vector<ForecastMetrics> persistence;
  std::vector<double> actual;       // every evaluated point, in time order
  std::vector<double> arx_pred;
  std::vector<double> persistence_pred;

  static double mean_mse(const std::vector<ForecastMetrics>& ms) {
    if (ms.empty()) return 0.0;
    double s = 0.0;
    for (const auto& m : ms) s += m.mse;
    return s / static_cast<double>(ms.size());
  }
  double mean_arx_mse() const { return mean_mse(arx); }
  double mean_persistence_mse() const { return mean_mse(persistence); }
};

/// Walk-forward evaluation. Each window fits on `train_window` consecutive rows,
/// then predicts the following `step` points one step ahead with observed lags.
/// The persistence forecast y_{t-1} is scored on the same points.
inline BacktestResult rolling_backtest(std::span<const double> history, std::span<const sim::ExogenousState> exo,
                                       std::size_t n_lags, double ridge_lambda, std::size_t train_window,
                                       std::size_t step) {
  if (step < 1) throw Error("rolling_backtest: step must be >= 1");
  if (train_window < 1) throw Error("rolling_backtest: train_window must be >= 1");
  if (history.size() < train_window + n_lags + 1)
    throw Error("rolling_backtest: window too large (need history >= train_window + n_lags + 1 = " +
                std::to_string(train_window + n_lags + 1) + ", have " + std::to_string(history.size()) + ")");
  const Design d = build_features(history, exo, n_lags);
  BacktestResult res;
  for (std::size_t start = 0; start + train_window < d.features.rows; start += step) {
    const ForecastModel m = fit_arx_rows(d, start, start + train_window, ridge_lambda);
    const std::size_t first = start + train_window;
    const std::size_t last = std::min(first + step, d.features.rows);
    std::vector<double> act, pa, pp;
    for (std::size_t r = first; r < last; ++r) {
      act.push_back(d.targets[r]);
      pa.push_back(std::max(0.0, m.evaluate(d.features.row(r))));
      pp.push_back(d.features(r, 0));  // lag-1 column
    }
    const std::size_t t0 = first + n_lags;
    res.arx.push_back({mse(act, pa), mae(act, pa), act.size(), t0});
    res.persistence.push_back({mse(act, pp), mae(act, pp), act.size(), t0});
    res.actual.insert(res.actual.end(), act.begin(), act.end());
    res.arx_pred.insert(res.arx_pred.end(), pa.begin(), pa.end());
    res.persistence_pred.insert(res.persistence_pred.end(), pp.begin(), pp.end());
  }
  return res;
}

/// The fit/predict surface the governance loop relies on. Other model families
/// can stand in as long as they provide the same members.
template <typename F>
concept Forecaster = requires(F f, const F cf, std::span<const double> y, std::span<const sim::ExogenousState> x,
                              const sim::ExogenousState& next) {
  { f.fit(y, x) } -> std::same_as<void>;
  { cf.ready() } -> std::convertible_to<bool>;
  { cf.predict(y, next) } -> std::convertible_to<double>;
  { cf.residual_sd() } -> std::convertible_to<double>;
};

/// ARX model plus the residual scale from its last fit.
class ArxForecaster {
 public:
  ArxForecaster(std::size_t n_lags, double ridge_lambda) : n_lags_(n_lags), lambda_(ridge_lambda) {}

  void fit(std::span<const double> history, std::span<const sim::ExogenousState> exo) {
    const Design d = build_features(history, exo, n_lags_);
    model_ = fit_arx(d, lambda_);
    double ss = 0.0;
    for (std::size_t r = 0; r < d.features.rows; ++r) {
      const double e = d.targets[r] - std::max(0.0, model_.evaluate(d.features.row(r)));
      ss += e * e;
    }
    residual_sd_ = std::sqrt(ss / static_cast<double>(d.features.rows));
    ready_ = true;
  }

  bool ready() const { return ready_; }
  std::size_t n_lags() const { return n_lags_; }
  const ForecastModel& model() const { return model_; }
  double residual_sd() const { return residual_sd_; }

  double predict(std::span<const double> recent, const sim::ExogenousState& next) const {
    return predict_next(model_, recent, next);
  }

 private:
  std::size_t n_lags_;
  double lambda_;
  ForecastModel model_{};
  double residual_sd_ = 0.0;
  bool ready_ = false;
};

static_assert(Forecaster<ArxForecaster>);

/// Recursive multi-step forecast: each prediction is fed back as the next lag.
/// Future world factors are taken as the last observed values with the clock advanced.
template <Forecaster F>
std::vector<double> forecast_path(const F& f, std::span<const double> recent, sim::ExogenousState last,
                                  std::size_t horizon) {
  std::vector<double> buf(recent.begin(), recent.end());
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    last.hour_of_day = (last.hour_of_day + 1) % sim::kHoursPerDay;
    if (last.hour_of_day == 0) last.day_of_week = (last.day_of_week + 1) % sim::kDaysPerWeek;
    const double y = f.predict(buf, last);
    out.push_back(y);
    buf.push_back(y);
  }
  return out;
}

}  // namespace fuelsim::forecast

#endif  // FUELSIM_FORECAST_ARX_HPP
