#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fuelsim/core/rng.hpp"
#include "fuelsim/forecast/arx.hpp"

using namespace fuelsim;
using namespace fuelsim::forecast;

namespace {

struct Series {
  std::vector<double> y;
  std::vector<sim::ExogenousState> x;
};

// Exogenous path with every encoded column varying, so λ = 0 fits are full rank.
std::vector<sim::ExogenousState> varied_exo(std::size_t n, std::uint64_t seed) {
  Rng64 rng{seed};
  std::vector<sim::ExogenousState> xs(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto& x = xs[t];
    x.weather_index = rng.uniform();
    x.traffic_index = rng.uniform();
    x.competitor_price = 2.9 + 0.3 * rng.uniform();
    x.hour_of_day = static_cast<int>(t % 24);
    x.day_of_week = static_cast<int>((t / 24) % 7);
    x.event_flag = rng.bernoulli(0.2);
  }
  return xs;
}

// y_t = 0.7 y_{t-1} + 0.3 weather_t, no noise.
Series ar1_weather(std::size_t n, std::uint64_t seed) {
  Series s;
  s.x = varied_exo(n, seed);
  s.y.resize(n);
  s.y[0] = 1.0;
  for (std::size_t t = 1; t < n; ++t) s.y[t] = 0.7 * s.y[t - 1] + 0.3 * s.x[t].weather_index;
  return s;
}

// Gaussian elimination with partial pivoting in long double on the normal equations.
std::vector<long double> normal_equation_oracle(const Design& d, long double lambda) {
  const std::size_t c = d.features.cols;
  std::vector<std::vector<long double>> a(c, std::vector<long double>(c + 1, 0.0L));
  for (std::size_t r = 0; r < d.features.rows; ++r)
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < c; ++j)
        a[i][j] += static_cast<long double>(d.features(r, i)) * d.features(r, j);
      a[i][c] += static_cast<long double>(d.features(r, i)) * d.targets[r];
    }
  for (std::size_t i = 0; i + 1 < c; ++i) a[i][i] += lambda;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < c; ++i)
      if (std::fabs(a[i][k]) > std::fabs(a[p][k])) p = i;
    std::swap(a[k], a[p]);
    for (std::size_t i = k + 1; i < c; ++i) {
      const long double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j <= c; ++j) a[i][j] -= f * a[k][j];
    }
  }
  std::vector<long double> w(c);
  for (std::size_t i = c; i-- > 0;) {
    long double s = a[i][c];
    for (std::size_t j = i + 1; j < c; ++j) s -= a[i][j] * w[j];
    w[i] = s / a[i][i];
  }
  return w;
}

double kahan_mse(const std::vector<double>& a, const std::vector<double>& p) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = (a[i] - p[i]) * (a[i] - p[i]) - comp;
    const double t = sum + e;
    comp = (t - sum) - e;
    sum = t;
  }
  return sum / static_cast<double>(a.size());
}

}  // namespace

TEST(BuildFeatures, LagColumnsAndTargets) {
  const std::vector<double> h{1, 2, 3, 4};
  const std::vector<sim::ExogenousState> x(4);
  const Design d = build_features(h, x, 2);
  ASSERT_EQ(d.features.rows, 2u);
  EXPECT_EQ(d.features(0, 0), 2.0);
  EXPECT_EQ(d.features(0, 1), 1.0);
  EXPECT_EQ(d.features(1, 0), 3.0);
  EXPECT_EQ(d.features(1, 1), 2.0);
  EXPECT_EQ(d.targets, (std::vector<double>{3, 4}));
}

TEST(BuildFeatures, LagsEqualToLengthRejected) {
  const std::vector<double> h{1, 2, 3};
  const std::vector<sim::ExogenousState> x(3);
  EXPECT_THROW(build_features(h, x, 3), Error);
}

TEST(BuildFeatures, ColumnCountIsLagsPlusExoPlusOne) {
  for (std::size_t lags : {1u, 3u, 24u}) {
    const auto s = ar1_weather(100, 3);
    EXPECT_EQ(build_features(s.y, s.x, lags).features.cols, lags + 33 + 1);
  }
}

TEST(BuildFeatures, ReferenceLevelsEncodeAsZero) {
  sim::ExogenousState x;
  x.hour_of_day = 0;
  x.day_of_week = 0;
  std::vector<double> row(kExogenousFeatures);
  encode_exogenous(x, row);
  for (std::size_t j = 3; j < kExogenousFeatures; ++j) EXPECT_EQ(row[j], 0.0);
  x.hour_of_day = 23;
  x.day_of_week = 6;
  x.event_flag = true;
  encode_exogenous(x, row);
  EXPECT_EQ(row[3 + 22], 1.0);
  EXPECT_EQ(row[26 + 5], 1.0);
  EXPECT_EQ(row[32], 1.0);
}

TEST(FitArx, ConstantSeriesIsInterceptOnly) {
  const std::vector<double> y(200, 5.0);
  const auto x = varied_exo(200, 1);
  const Design d = build_features(y, x, 2);
  const auto m = fit_arx(d, 1e-3);
  for (std::size_t r = 0; r < d.features.rows; ++r) EXPECT_NEAR(m.evaluate(d.features.row(r)), 5.0, 1e-6);
  EXPECT_NEAR(predict_next(m, std::vector<double>{5, 5}, x[7]), 5.0, 1e-6);
}

TEST(FitArx, RecoversNoiselessCoefficients) {
  const auto s = ar1_weather(500, 9);
  const Design d = build_features(s.y, s.x, 1);
  const auto m = fit_arx(d, 0.0);
  const auto oracle = normal_equation_oracle(d, 0.0L);
  const auto w = m.coefficients();
  ASSERT_EQ(w.size(), oracle.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], static_cast<double>(oracle[i]), 1e-6) << i;
  EXPECT_NEAR(m.lag_coeffs[0], 0.7, 1e-6);
  EXPECT_NEAR(m.exo_coeffs[0], 0.3, 1e-6);
  for (std::size_t j = 1; j < kExogenousFeatures; ++j) EXPECT_NEAR(m.exo_coeffs[j], 0.0, 1e-6) << j;
  EXPECT_NEAR(m.intercept, 0.0, 1e-6);
}

TEST(FitArx, RidgeMatchesExtendedPrecisionOracle) {
  const auto s = ar1_weather(300, 2);
  const Design d = build_features(s.y, s.x, 3);
  const auto w = fit_arx(d, 0.5).coefficients();
  const auto oracle = normal_equation_oracle(d, 0.5L);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], static_cast<double>(oracle[i]), 1e-8) << i;
}

TEST(FitArx, HugeRidgeShrinksPenalizedCoefficients) {
  const auto s = ar1_weather(300, 4);
  const auto m = fit_arx(build_features(s.y, s.x, 2), 1e9);
  for (double a : m.lag_coeffs) EXPECT_LT(std::abs(a), 1e-6);
  for (double b : m.exo_coeffs) EXPECT_LT(std::abs(b), 1e-6);
}

TEST(FitArx, RankDeficientWithoutRidge) {
  const std::vector<double> y(30, 1.0);
  const std::vector<sim::ExogenousState> x(30);
  const Design d = build_features(y, x, 1);
  EXPECT_THROW(fit_arx(d, 0.0), RankDeficientError);
  EXPECT_NO_THROW(fit_arx(d, 1e-3));
}

TEST(FitArx, PenalizedLossMonotoneInLambda) {
  Rng64 rng{5};
  auto s = ar1_weather(400, 5);
  for (auto& v : s.y) v += rng.gaussian(0.0, 0.1);
  const Design d = build_features(s.y, s.x, 4);
  double prev = -1.0;
  for (double lambda : {0.0, 1e-4, 1e-2, 1.0, 10.0, 1e3, 1e6}) {
    const double loss = penalized_loss(fit_arx(d, lambda), d);
    EXPECT_GE(loss, prev - 1e-9 * std::max(1.0, prev)) << "lambda " << lambda;
    prev = loss;
  }
}

TEST(PredictNext, InterceptOnlyModel) {
  std::vector<double> w(feature_count(2), 0.0);
  w.back() = 7.0;
  const auto m = model_from_coefficients(w, 2, 0.0);
  EXPECT_EQ(predict_next(m, std::vector<double>{3, 4}, sim::ExogenousState{}), 7.0);
}

TEST(PredictNext, NegativeClampsToZero) {
  std::vector<double> w(feature_count(1), 0.0);
  w.back() = -3.0;
  const auto m = model_from_coefficients(w, 1, 0.0);
  EXPECT_EQ(predict_next(m, std::vector<double>{1}, sim::ExogenousState{}), 0.0);
}

TEST(PredictNext, MatchesManualDotProduct) {
  Rng64 rng{17};
  std::vector<double> w(feature_count(3));
  for (auto& v : w) v = rng.uniform(0.0, 1.0);
  const auto m = model_from_coefficients(w, 3, 0.0);
  sim::ExogenousState x;
  x.weather_index = 0.4;
  x.traffic_index = 0.8;
  x.competitor_price = 3.1;
  x.hour_of_day = 5;
  x.day_of_week = 3;
  x.event_flag = true;
  const std::vector<double> recent{10, 20, 30};  // y_{t-1} = 30
  double manual = w[0] * 30 + w[1] * 20 + w[2] * 10;
  manual += w[3] * 0.4 + w[4] * 0.8 + w[5] * 3.1;
  manual += w[3 + 3 + 4];        // hour 5 dummy
  manual += w[3 + 3 + 23 + 2];   // day 3 dummy
  manual += w[3 + 32];           // event
  manual += w.back();
  EXPECT_NEAR(predict_next(m, recent, x), manual, 1e-12);
}

TEST(PredictNext, ShortHistoryRejected) {
  const auto m = model_from_coefficients(std::vector<double>(feature_count(3), 0.0), 3, 0.0);
  EXPECT_THROW(predict_next(m, std::vector<double>{1, 2}, sim::ExogenousState{}), Error);
}

TEST(Mse, IdenticalIsZero) {
  const std::vector<double> a{1.5, -2, 3};
  EXPECT_EQ(mse(a, a), 0.0);
}

TEST(Mse, AnalyticExample) { EXPECT_DOUBLE_EQ(mse(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 5}), 4.0 / 3.0); }

TEST(Mse, MatchesCompensatedSum) {
  Rng64 rng{23};
  std::vector<double> a(100), p(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = rng.gaussian(100.0, 30.0);
    p[i] = rng.gaussian(100.0, 30.0);
  }
  const double ref = kahan_mse(a, p);
  EXPECT_NEAR(mse(a, p), ref, 1e-10 * ref);
}

TEST(Mse, PermutationInvariantAndQuadraticScaling) {
  Rng64 rng{29};
  std::vector<double> a(64), p(64);
  for (std::size_t i = 0; i < 64; ++i) {
    a[i] = rng.uniform(-5, 5);
    p[i] = rng.uniform(-5, 5);
  }
  const double base = mse(a, p);
  std::vector<std::size_t> idx(64);
  for (std::size_t i = 0; i < 64; ++i) idx[i] = i;
  for (std::size_t i = 63; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
  std::vector<double> ap(64), pp(64), as(64), ps(64);
  for (std::size_t i = 0; i < 64; ++i) {
    ap[i] = a[idx[i]];
    pp[i] = p[idx[i]];
    as[i] = 3.0 * a[i];
    ps[i] = 3.0 * p[i];
  }
  EXPECT_NEAR(mse(ap, pp), base, 1e-12 * base);
  EXPECT_NEAR(mse(as, ps), 9.0 * base, 1e-12 * base);
}

TEST(Mse, RejectsMismatchedOrEmpty) {
  EXPECT_THROW(mse(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(Backtest, NoiselessAr1IsPerfect) {
  const auto s = ar1_weather(600, 31);
  const auto r = rolling_backtest(s.y, s.x, 1, 0.0, 8 * 24, 24);  // 8 days so every weekday column is present
  ASSERT_FALSE(r.arx.empty());
  for (const auto& w : r.arx) EXPECT_LT(w.mse, 1e-10);
  EXPECT_GT(r.mean_persistence_mse(), 0.0);
}

TEST(Backtest, PersistenceOnRampHasUnitErrors) {
  const std::vector<double> h{1, 2, 3, 4};
  const std::vector<sim::ExogenousState> x(4);
  const auto r = rolling_backtest(h, x, 1, 1.0, 1, 1);
  ASSERT_EQ(r.persistence.size(), 2u);
  for (const auto& w : r.persistence) EXPECT_DOUBLE_EQ(w.mse, 1.0);
}

TEST(Backtest, WindowsCoverEveryPointOnce) {
  const auto s = ar1_weather(300, 37);
  const auto r = rolling_backtest(s.y, s.x, 2, 1e-3, 100, 7);
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.arx.size(); ++i) {
    EXPECT_EQ(r.arx[i].window_start, 2 + 100 + 7 * i);
    n += r.arx[i].n_points;
  }
  EXPECT_EQ(n, 300u - 2 - 100);
  EXPECT_EQ(r.actual.size(), n);
}

TEST(Backtest, OversizedWindowRejected) {
  const auto s = ar1_weather(50, 1);
  EXPECT_THROW(rolling_backtest(s.y, s.x, 2, 1e-3, 48, 1), Error);
}

TEST(ArxForecaster, FitsAndFeedsBackPath) {
  const auto s = ar1_weather(400, 41);
  ArxForecaster f(1, 0.0);
  EXPECT_FALSE(f.ready());
  f.fit(s.y, s.x);
  EXPECT_TRUE(f.ready());
  EXPECT_LT(f.residual_sd(), 1e-6);
  const auto path = forecast_path(f, s.y, s.x.back(), 3);
  ASSERT_EQ(path.size(), 3u);
  // The path reuses the last observed weather, so each step is 0.7 y + 0.3 w.
  const double w = s.x.back().weather_index;
  double y = s.y.back();
  for (double p : path) {
    y = 0.7 * y + 0.3 * w;
    EXPECT_NEAR(p, y, 1e-6);
  }
}
