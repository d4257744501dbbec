#ifndef FUELSIM_CORE_UNITS_HPP
#define FUELSIM_CORE_UNITS_HPP

// Fixed-point quantities. Every volume and money figure in the simulator is an
// integer so balances and KPI sums are exact.
//
//   Volume : thousandths of a gallon (mgal)
//   Price  : cents per gallon
//   Money  : millicents (1e-5 dollars); Volume * Price lands here exactly

#include <cmath>
#include <compare>
#include <cstdint>

namespace fuelsim {

template <typename Tag>
struct Quantity {
  std::int64_t raw = 0;

  constexpr Quantity() = default;
  constexpr explicit Quantity(std::int64_t v) : raw(v) {}

  constexpr auto operator<=>(const Quantity&) const = default;

  constexpr Quantity& operator+=(Quantity o) { raw += o.raw; return *this; }
  constexpr Quantity& operator-=(Quantity o) { raw -= o.raw; return *this; }
  friend constexpr Quantity operator+(Quantity a, Quantity b) { return Quantity{a.raw + b.raw}; }
  friend constexpr Quantity operator-(Quantity a, Quantity b) { return Quantity{a.raw - b.raw}; }
  friend constexpr Quantity operator-(Quantity a) { return Quantity{-a.raw}; }
};

struct VolumeTag {};
struct PriceTag {};
struct MoneyTag {};

using Volume = Quantity<VolumeTag>;
using Price = Quantity<PriceTag>;
using Money = Quantity<MoneyTag>;

inline constexpr std::int64_t kMgalPerGallon = 1000;
inline constexpr std::int64_t kCentsPerDollar = 100;
inline constexpr std::int64_t kMillicentsPerDollar = 100000;

constexpr Money operator*(Volume v, Price p) { return Money{v.raw * p.raw}; }
constexpr Money operator*(Price p, Volume v) { return v * p; }

inline Volume gallons(double g) { return Volume{std::llround(g * kMgalPerGallon)}; }
inline Price dollars_per_gallon(double d) { return Price{std::llround(d * kCentsPerDollar)}; }
inline Money dollars(double d) { return Money{std::llround(d * kMillicentsPerDollar)}; }

constexpr double to_gallons(Volume v) { return static_cast<double>(v.raw) / kMgalPerGallon; }
constexpr double to_dollars(Price p) { return static_cast<double>(p.raw) / kCentsPerDollar; }
constexpr double to_dollars(Money m) { return static_cast<double>(m.raw) / kMillicentsPerDollar; }

}  // namespace fuelsim

#endif  // FUELSIM_CORE_UNITS_HPP
