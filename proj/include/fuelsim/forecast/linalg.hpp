#ifndef FUELSIM_FORECAST_LINALG_HPP
#define FUELSIM_FORECAST_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fuelsim/core/error.hpp"

namespace fuelsim::forecast {

/// Dense row-major matrix; just enough for least-squares design matrices.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(std::size_t column)
      : Error("normal matrix is rank deficient (pivot " + std::to_string(column) +
              "); use ridge_lambda > 0 or more rows"),
        column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Solves A x = b for symmetric positive (semi)definite A by Cholesky.
/// Throws RankDeficientError when a pivot collapses relative to the diagonal scale.
inline std::vector<double> cholesky_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  const double tol = std::max(scale, 1.0) * 1e-12;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > tol)) throw RankDeficientError(j);
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return b;
}

/// Forms AᵀA and Aᵀy over the selected rows [first, last).
inline void normal_equations(const Matrix& a, std::span<const double> y, std::size_t first, std::size_t last,
                             Matrix& ata, std::vector<double>& aty) {
  const std::size_t n = a.cols;
  ata = Matrix(n, n);
  aty.assign(n, 0.0);
  for (std::size_t r = first; r < last; ++r) {
    const auto row = a.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = row[i];
      if (xi == 0.0) continue;
      aty[i] += xi * y[r];
      for (std::size_t j = 0; j <= i; ++j) ata(i, j) += xi * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) ata(j, i) = ata(i, j);
}

}  // namespace fuelsim::forecast

#endif  // FUELSIM_FORECAST_LINALG_HPP
