#ifndef FUELSIM_SIM_CATALOG_HPP
#define FUELSIM_SIM_CATALOG_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "fuelsim/core/rng.hpp"

namespace fuelsim::sim {

enum class Category { snacks, beverages, car_accessories, car_care, sundries, services };

struct CatalogItem {
  std::string_view name;
  Category category;
  double popularity;
  double price;  // $ shelf price, informational
};

inline constexpr std::array<CatalogItem, 40> kCatalog{{
    {"potato_chips", Category::snacks, 1.6, 2.49},
    {"candy_bar", Category::snacks, 1.8, 1.79},
    {"beef_jerky", Category::snacks, 0.9, 6.99},
    {"trail_mix", Category::snacks, 0.6, 4.49},
    {"pretzels", Category::snacks, 0.7, 2.29},
    {"donut", Category::snacks, 1.2, 1.49},
    {"hot_dog", Category::snacks, 1.1, 2.99},
    {"sandwich", Category::snacks, 1.0, 5.49},
    {"energy_drink", Category::beverages, 1.9, 3.29},
    {"bottled_water", Category::beverages, 2.0, 1.49},
    {"soda", Category::beverages, 1.7, 2.19},
    {"coffee", Category::beverages, 2.2, 1.99},
    {"iced_tea", Category::beverages, 0.8, 2.49},
    {"sports_drink", Category::beverages, 0.9, 2.29},
    {"juice", Category::beverages, 0.5, 2.99},
    {"milk", Category::beverages, 0.4, 3.49},
    {"windshield_wipers", Category::car_accessories, 0.3, 19.99},
    {"phone_charger", Category::car_accessories, 0.35, 14.99},
    {"air_freshener", Category::car_accessories, 0.6, 3.99},
    {"ice_scraper", Category::car_accessories, 0.2, 6.99},
    {"floor_mats", Category::car_accessories, 0.1, 24.99},
    {"phone_mount", Category::car_accessories, 0.2, 12.99},
    {"sunshade", Category::car_accessories, 0.15, 9.99},
    {"motor_oil", Category::car_care, 0.4, 8.99},
    {"washer_fluid", Category::car_care, 0.6, 4.99},
    {"coolant", Category::car_care, 0.25, 12.99},
    {"tire_gauge", Category::car_care, 0.2, 5.99},
    {"fuel_additive", Category::car_care, 0.3, 7.99},
    {"microfiber_cloth", Category::car_care, 0.3, 3.49},
    {"tire_shine", Category::car_care, 0.15, 6.49},
    {"lottery_ticket", Category::sundries, 1.4, 2.00},
    {"pain_reliever", Category::sundries, 0.4, 4.99},
    {"lip_balm", Category::sundries, 0.3, 2.49},
    {"sunglasses", Category::sundries, 0.15, 9.99},
    {"batteries_aa", Category::sundries, 0.3, 6.49},
    {"car_wash", Category::services, 1.0, 9.00},
    {"air_pump", Category::services, 0.5, 1.50},
    {"vacuum", Category::services, 0.4, 2.00},
    {"propane_exchange", Category::services, 0.2, 21.99},
    {"ev_charge_session", Category::services, 0.3, 8.50},
}};

inline constexpr int kCatalogSize = static_cast<int>(kCatalog.size());
inline constexpr int kCategoryCount = 6;
inline constexpr int kPreferenceDims = 3;

/// Fixed population of repeat customers, each with a stable preference vector.
/// Basket choice weights are popularity * exp(strength * pref . item_feature), so
/// the purchase matrix has low-rank structure a factor model can recover.
class CustomerPopulation {
 public:
  CustomerPopulation(int users, Rng64 rng, double strength = 1.5) : users_(users) {
    std::array<std::array<double, kPreferenceDims>, kCategoryCount> category_axes{};
    for (auto& axis : category_axes)
      for (double& x : axis) x = rng.gaussian();
    std::array<std::array<double, kPreferenceDims>, kCatalogSize> features{};
    for (int i = 0; i < kCatalogSize; ++i)
      for (int d = 0; d < kPreferenceDims; ++d)
        features[i][d] = category_axes[static_cast<int>(kCatalog[i].category)][d] + 0.5 * rng.gaussian();

    cdf_.assign(static_cast<std::size_t>(users + 1) * kCatalogSize, 0.0);
    for (int u = 0; u <= users; ++u) {
      std::array<double, kPreferenceDims> pref{};
      if (u < users)
        for (double& x : pref) x = rng.gaussian();
      double acc = 0.0;
      for (int i = 0; i < kCatalogSize; ++i) {
        double dot = 0.0;
        for (int d = 0; d < kPreferenceDims; ++d) dot += pref[d] * features[i][d];
        acc += kCatalog[i].popularity * std::exp(strength * dot);
        cdf_[static_cast<std::size_t>(u) * kCatalogSize + i] = acc;
      }
    }
  }

  int users() const noexcept { return users_; }

  /// Draws 1 to 4 distinct items. Users outside [0, users) shop by popularity alone.
  std::vector<int> sample_basket(int user, Rng64& rng) const {
    const int row = (user >= 0 && user < users_) ? user : users_;
    const double* cdf = cdf_.data() + static_cast<std::size_t>(row) * kCatalogSize;
    const int size = 1 + static_cast<int>(rng.below(4));
    std::vector<int> basket;
    basket.reserve(size);
    for (int attempt = 0; static_cast<int>(basket.size()) < size && attempt < 32; ++attempt) {
      const double u = rng.uniform() * cdf[kCatalogSize - 1];
      int item = 0;
      while (item < kCatalogSize - 1 && cdf[item] <= u) ++item;
      bool seen = false;
      for (int b : basket) seen = seen || b == item;
      if (!seen) basket.push_back(item);
    }
    std::sort(basket.begin(), basket.end());
    return basket;
  }

 private:
  int users_;
  std::vector<double> cdf_;  // (users + 1) rows; the last row is the anonymous shopper
};

}  // namespace fuelsim::sim

#endif  // FUELSIM_SIM_CATALOG_HPP
