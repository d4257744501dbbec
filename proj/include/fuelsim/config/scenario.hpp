#ifndef FUELSIM_CONFIG_SCENARIO_HPP
#define FUELSIM_CONFIG_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fuelsim/core/error.hpp"
#include "fuelsim/ops/governance.hpp"
#include "fuelsim/pricing/qlearning.hpp"
#include "fuelsim/recommender/mf.hpp"
#include "fuelsim/sim/episode.hpp"
#include "fuelsim/sim/faults.hpp"

namespace fuelsim::config {

enum class PricingChoice { greedy, fixed_margin, competitor_match };

inline std::string to_string(PricingChoice p) {
  switch (p) {
    case PricingChoice::greedy: return "greedy";
    case PricingChoice::fixed_margin: return "fixed_margin";
    case PricingChoice::competitor_match: return "competitor_match";
  }
  return "?";
}

inline std::optional<PricingChoice> parse_pricing_choice(std::string_view s) {
  for (auto p : {PricingChoice::greedy, PricingChoice::fixed_margin, PricingChoice::competitor_match})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

struct ScenarioConfig {
  std::int64_t seed = 42;
  int horizon_days = 90;
  sim::StationParams station{};
  pricing::QLearnParams qlearn{};
  PricingChoice policy = PricingChoice::greedy;
  ops::GovernanceParams governance{};
  int backtest_step_hours = 24;
  recommender::MfParams recommender{};
  double holdout_fraction = 0.2;
  std::vector<sim::FaultInjection> faults;

  std::uint64_t digest = 0;  // FNV-1a of the canonical form; set by parse_config

  std::int64_t horizon_hours() const { return static_cast<std::int64_t>(horizon_days) * sim::kHoursPerDay; }

  sim::SimConfig sim_config() const {
    return sim::SimConfig{static_cast<std::uint64_t>(seed), digest, station, faults};
  }
};

using nlohmann::json;

namespace detail {

enum class Kind { real, integer, boolean, text };

struct Key {
  std::string name;
  Kind kind;
  std::function<json(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const json&)> set;  // value already type-checked
};

inline Key key(std::string name, Kind kind, std::function<json(const ScenarioConfig&)> get,
               std::function<void(ScenarioConfig&, const json&)> set) {
  return {std::move(name), kind, std::move(get), std::move(set)};
}

#define FUELSIM_REAL(name, path) \
  key(name, Kind::real, [](const ScenarioConfig& c) { return json(c.path); }, [](ScenarioConfig& c, const json& x) { c.path = x.get<double>(); })
#define FUELSIM_INT(name, path) \
  key(name, Kind::integer, [](const ScenarioConfig& c) { return json(c.path); }, [](ScenarioConfig& c, const json& x) { c.path = x.get<int>(); })

inline const std::vector<Key>& keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> v;
    v.push_back(key("seed", Kind::integer, [](const ScenarioConfig& c) { return json(c.seed); },
                    [](ScenarioConfig& c, const json& x) { c.seed = x.get<std::int64_t>(); }));
    v.push_back(FUELSIM_INT("horizon_days", horizon_days));
    // station
    v.push_back(FUELSIM_REAL("base_arrival_rate", station.base_arrival_rate));
    v.push_back(FUELSIM_REAL("weather_damping", station.weather_damping));
    v.push_back(FUELSIM_REAL("traffic_gain", station.traffic_gain));
    v.push_back(FUELSIM_REAL("elasticity_beta", station.elasticity_beta));
    v.push_back(FUELSIM_REAL("gallons_mean", station.gallons_mean));
    v.push_back(FUELSIM_REAL("gallons_sd", station.gallons_sd));
    v.push_back(FUELSIM_REAL("shop_attach_prob", station.shop_attach_prob));
    v.push_back(FUELSIM_REAL("shop_only_rate", station.shop_only_rate));
    v.push_back(FUELSIM_REAL("tank_capacity", station.tank_capacity));
    v.push_back(FUELSIM_REAL("initial_tank_level", station.initial_tank_level));
    v.push_back(FUELSIM_INT("delivery_lead_time", station.delivery_lead_time));
    v.push_back(key(
        "checkout_mode", Kind::text,
        [](const ScenarioConfig& c) { return json(c.station.checkout_mode == sim::CheckoutMode::smart ? "smart" : "manual"); },
        [](ScenarioConfig& c, const json& x) {
          const auto s = x.get<std::string>();
          if (s != "smart" && s != "manual") throw ConfigError("checkout_mode", "must be \"smart\" or \"manual\"");
          c.station.checkout_mode = s == "smart" ? sim::CheckoutMode::smart : sim::CheckoutMode::manual;
        }));
    v.push_back(FUELSIM_REAL("recognition_success_prob", station.recognition_success_prob));
    v.push_back(FUELSIM_REAL("manual_checkout_mean", station.manual_checkout_mean));
    v.push_back(FUELSIM_REAL("smart_checkout_mean", station.smart_checkout_mean));
    v.push_back(FUELSIM_INT("repeat_users", station.repeat_users));
    v.push_back(FUELSIM_REAL("retention_at_parity", station.retention_at_parity));
    v.push_back(FUELSIM_REAL("retention_slope", station.retention_slope));
    v.push_back(FUELSIM_REAL("retention_smoothing", station.retention_smoothing));
    for (int h = 0; h < sim::kHoursPerDay; ++h) {
      char name[32];
      std::snprintf(name, sizeof name, "daypart_multiplier_%02d", h);
      v.push_back(key(name, Kind::real,
                      [h](const ScenarioConfig& c) { return json(c.station.daypart_multipliers[static_cast<std::size_t>(h)]); },
                      [h](ScenarioConfig& c, const json& x) {
                        c.station.daypart_multipliers[static_cast<std::size_t>(h)] = x.get<double>();
                      }));
    }
    // world factors
    v.push_back(FUELSIM_REAL("index_reversion", station.exo.index_reversion));
    v.push_back(FUELSIM_REAL("index_step_sd", station.exo.index_step_sd));
    static constexpr const char* kParts[] = {"night", "morning", "midday", "evening"};
    for (int d = 0; d < 4; ++d) {
      const auto i = static_cast<std::size_t>(d);
      v.push_back(key(std::string("weather_mean_") + kParts[d], Kind::real,
                      [i](const ScenarioConfig& c) { return json(c.station.exo.weather_means[i]); },
                      [i](ScenarioConfig& c, const json& x) { c.station.exo.weather_means[i] = x.get<double>(); }));
      v.push_back(key(std::string("traffic_mean_") + kParts[d], Kind::real,
                      [i](const ScenarioConfig& c) { return json(c.station.exo.traffic_means[i]); },
                      [i](ScenarioConfig& c, const json& x) { c.station.exo.traffic_means[i] = x.get<double>(); }));
    }
    v.push_back(FUELSIM_REAL("margin_target", station.exo.margin_target));
    v.push_back(FUELSIM_REAL("margin_reversion", station.exo.margin_reversion));
    v.push_back(FUELSIM_REAL("margin_step_sd", station.exo.margin_step_sd));
    v.push_back(FUELSIM_REAL("wholesale_daily_sd", station.exo.wholesale_daily_sd));
    v.push_back(FUELSIM_REAL("initial_wholesale", station.exo.initial_wholesale));
    v.push_back(FUELSIM_REAL("event_daily_prob", station.exo.event_daily_prob));
    v.push_back(FUELSIM_INT("event_days", station.exo.event_days));
    v.push_back(FUELSIM_REAL("event_traffic_boost", station.exo.event_traffic_boost));
    // sensors
    v.push_back(FUELSIM_REAL("gauge_noise_sd", station.sensors.gauge_noise_sd));
    v.push_back(FUELSIM_REAL("tank_temp_mean", station.sensors.tank_temp_mean));
    v.push_back(FUELSIM_REAL("tank_temp_swing", station.sensors.tank_temp_swing));
    v.push_back(FUELSIM_INT("dispensers", station.sensors.dispensers));
    v.push_back(FUELSIM_INT("vibration_frame_len", station.sensors.vibration_frame_len));
    v.push_back(FUELSIM_REAL("vibration_sample_rate", station.sensors.vibration_sample_rate));
    v.push_back(FUELSIM_REAL("vibration_tone_amplitude", station.sensors.vibration_tone_amplitude));
    v.push_back(FUELSIM_REAL("vibration_noise_sd", station.sensors.vibration_noise_sd));
    v.push_back(FUELSIM_REAL("fault_tone_hz", station.sensors.fault_tone_hz));
    v.push_back(FUELSIM_INT("fleet_vehicles", station.sensors.fleet_vehicles));
    v.push_back(FUELSIM_REAL("battery_nominal", station.sensors.battery_nominal));
    v.push_back(FUELSIM_REAL("battery_ar", station.sensors.battery_ar));
    v.push_back(FUELSIM_REAL("battery_noise_sd", station.sensors.battery_noise_sd));
    v.push_back(FUELSIM_REAL("tire_nominal_psi", station.sensors.tire_nominal_psi));
    v.push_back(FUELSIM_REAL("tire_noise_sd", station.sensors.tire_noise_sd));
    // pricing
    v.push_back(key(
        "policy", Kind::text, [](const ScenarioConfig& c) { return json(to_string(c.policy)); },
        [](ScenarioConfig& c, const json& x) {
          const auto p = parse_pricing_choice(x.get<std::string>());
          if (!p) throw ConfigError("policy", "must be greedy, fixed_margin or competitor_match");
          c.policy = *p;
        }));
    v.push_back(FUELSIM_REAL("alpha", qlearn.alpha));
    v.push_back(FUELSIM_REAL("gamma", qlearn.gamma));
    v.push_back(FUELSIM_REAL("epsilon_start", qlearn.epsilon_start));
    v.push_back(FUELSIM_REAL("epsilon_end", qlearn.epsilon_end));
    v.push_back(FUELSIM_INT("epsilon_decay_episodes", qlearn.epsilon_decay_episodes));
    v.push_back(FUELSIM_INT("episodes", qlearn.episodes));
    v.push_back(FUELSIM_INT("episode_days", qlearn.episode_days));
    v.push_back(FUELSIM_REAL("reward_margin_weight", qlearn.weights.revenue));
    v.push_back(FUELSIM_REAL("reward_volume_weight", qlearn.weights.volume));
    v.push_back(FUELSIM_REAL("reward_retention_weight", qlearn.weights.retention));
    // inventory
    v.push_back(key(
        "inventory_policy", Kind::text,
        [](const ScenarioConfig& c) { return json(ops::to_string(c.governance.inventory.kind)); },
        [](ScenarioConfig& c, const json& x) {
          const auto s = x.get<std::string>();
          if (s == "forecast_driven") c.governance.inventory.kind = ops::PolicyKind::forecast_driven;
          else if (s == "fixed_schedule") c.governance.inventory.kind = ops::PolicyKind::fixed_schedule;
          else throw ConfigError("inventory_policy", "must be forecast_driven or fixed_schedule");
        }));
    v.push_back(FUELSIM_REAL("service_level_z", governance.inventory.service_level_z));
    v.push_back(FUELSIM_REAL("order_up_to", governance.inventory.order_up_to));
    v.push_back(FUELSIM_REAL("holding_cost", governance.inventory.holding_cost));
    v.push_back(FUELSIM_REAL("stockout_penalty", governance.inventory.stockout_penalty));
    v.push_back(FUELSIM_INT("fixed_interval", governance.inventory.fixed_interval));
    // forecaster
    v.push_back(FUELSIM_INT("n_lags", governance.forecaster.n_lags));
    v.push_back(FUELSIM_REAL("ridge_lambda", governance.forecaster.ridge_lambda));
    v.push_back(FUELSIM_INT("forecast_window_days", governance.forecaster.window_days));
    v.push_back(FUELSIM_INT("forecast_min_train_days", governance.forecaster.min_train_days));
    v.push_back(FUELSIM_INT("backtest_step_hours", backtest_step_hours));
    // monitors
    v.push_back(key(
        "monitors_enabled", Kind::boolean, [](const ScenarioConfig& c) { return json(c.governance.monitors_enabled); },
        [](ScenarioConfig& c, const json& x) { c.governance.monitors_enabled = x.get<bool>(); }));
    v.push_back(FUELSIM_REAL("cusum_k", governance.monitor.cusum_k));
    v.push_back(FUELSIM_REAL("cusum_h", governance.monitor.cusum_h));
    v.push_back(FUELSIM_INT("leak_calibration_hours", governance.monitor.leak_calibration_hours));
    v.push_back(FUELSIM_REAL("band_ratio", governance.monitor.band_ratio));
    v.push_back(FUELSIM_REAL("band_half_width_hz", governance.monitor.band_half_width_hz));
    v.push_back(FUELSIM_INT("vibration_baseline_days", governance.monitor.vibration_baseline_days));
    v.push_back(FUELSIM_INT("battery_window_days", governance.monitor.battery_window_days));
    v.push_back(key(
        "auth_window_sec", Kind::integer, [](const ScenarioConfig& c) { return json(c.governance.monitor.auth_window_sec); },
        [](ScenarioConfig& c, const json& x) { c.governance.monitor.auth_window_sec = x.get<std::int64_t>(); }));
    // recommender
    v.push_back(FUELSIM_INT("mf_k", recommender.k));
    v.push_back(FUELSIM_REAL("mf_lambda", recommender.reg_lambda));
    v.push_back(FUELSIM_REAL("mf_learning_rate", recommender.learning_rate));
    v.push_back(FUELSIM_INT("mf_epochs", recommender.epochs));
    v.push_back(FUELSIM_REAL("holdout_fraction", holdout_fraction));
    return v;
  }();
  return k;
}

#undef FUELSIM_REAL
#undef FUELSIM_INT

inline int line_of(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

/// Line of the first occurrence of `"key"` in the text, 0 if absent.
inline int line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const std::size_t at = text.find(quoted);
  return at == std::string_view::npos ? 0 : line_of(text, at);
}

inline bool type_ok(Kind kind, const json& v) {
  switch (kind) {
    case Kind::real: return v.is_number();
    case Kind::integer: return v.is_number_integer();
    case Kind::boolean: return v.is_boolean();
    case Kind::text: return v.is_string();
  }
  return false;
}

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::real: return "a number";
    case Kind::integer: return "an integer";
    case Kind::boolean: return "true or false";
    case Kind::text: return "a string";
  }
  return "?";
}

inline json fault_to_json(const sim::FaultInjection& f) {
  return json{{"kind", std::string(sim::to_string(f.kind))},
              {"start_hour", f.start_hour},
              {"magnitude", f.magnitude},
              {"target", f.target}};
}

}  // namespace detail

/// Checks cross-module invariants after all keys are applied.
inline void validate(const ScenarioConfig& c) {
  if (c.seed < 0) throw ConfigError("seed", "must be >= 0");
  if (c.horizon_days < 1) throw ConfigError("horizon_days", "must be >= 1");
  sim::validate(c.station);
  pricing::validate(c.qlearn);
  ops::InventoryParams inv = c.governance.inventory;
  inv.lead_time = c.station.delivery_lead_time;
  ops::validate(inv, c.station.tank_capacity);
  ops::validate(c.governance.forecaster);
  ops::validate(c.governance.monitor);
  if (c.backtest_step_hours < 1) throw ConfigError("backtest_step_hours", "must be >= 1");
  recommender::validate(c.recommender);
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0)) throw ConfigError("holdout_fraction", "must be in (0,1)");
  for (const auto& f : c.faults) {
    if (f.start_hour < 0) throw ConfigError("faults", "start_hour must be >= 0");
    if (!(f.magnitude >= 0.0) || !std::isfinite(f.magnitude)) throw ConfigError("faults", "magnitude must be finite and >= 0");
    if (f.target < 0) throw ConfigError("faults", "target must be >= 0");
    if (f.kind == sim::FaultKind::leak && f.magnitude >= 1.0) throw ConfigError("faults", "leak magnitude is a fraction per hour below 1");
  }
}

/// Every key with its value, including defaults, as one sorted object.
inline json canonical_json(const ScenarioConfig& c) {
  json j = json::object();
  for (const auto& k : detail::keys()) j[k.name] = k.get(c);
  json faults = json::array();
  for (const auto& f : c.faults) faults.push_back(detail::fault_to_json(f));
  j["faults"] = faults;
  return j;
}

inline std::string canonical_form(const ScenarioConfig& c) { return canonical_json(c).dump(); }

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t config_digest(const ScenarioConfig& c) { return fnv1a64(canonical_form(c)); }

/// Strict parse: one flat object, known keys only, each at most once, right types.
inline ScenarioConfig parse_config(std::string_view text) {
  using detail::Kind;
  std::set<std::string> seen_top;
  std::string duplicate;
  const json::parser_callback_t cb = [&](int d, json::parse_event_t ev, json& parsed) {
    if (ev == json::parse_event_t::key && d == 1) {
      const std::string k = parsed.get<std::string>();
      if (!seen_top.insert(k).second && duplicate.empty()) duplicate = k;
    }
    return true;
  };
  json j;
  try {
    j = json::parse(text.begin(), text.end(), cb);
  } catch (const json::parse_error& e) {
    const int line = detail::line_of(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("<syntax>", e.what(), line);
  }
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object", 1);
  if (!duplicate.empty()) throw ConfigError(duplicate, "key appears more than once", detail::line_of_key(text, duplicate));

  ScenarioConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& name = it.key();
    const int line = detail::line_of_key(text, name);
    if (name == "faults") {
      if (!it->is_array()) throw ConfigError(name, "must be an array of fault objects", line);
      for (const json& f : *it) {
        if (!f.is_object()) throw ConfigError(name, "each fault must be an object", line);
        sim::FaultInjection fi;
        bool have_kind = false, have_start = false, have_mag = false;
        for (auto fit = f.begin(); fit != f.end(); ++fit) {
          const std::string& fk = fit.key();
          const int fline = detail::line_of_key(text, fk);
          if (fk == "kind") {
            const auto kind = fit->is_string() ? sim::parse_fault_kind(fit->get<std::string>()) : std::nullopt;
            if (!kind) throw ConfigError("faults.kind", "must be leak, vibration, battery, tire or fraud", fline);
            fi.kind = *kind;
            have_kind = true;
          } else if (fk == "start_hour") {
            if (!fit->is_number_integer()) throw ConfigError("faults.start_hour", "must be an integer", fline);
            fi.start_hour = fit->get<std::int64_t>();
            have_start = true;
          } else if (fk == "magnitude") {
            if (!fit->is_number()) throw ConfigError("faults.magnitude", "must be a number", fline);
            fi.magnitude = fit->get<double>();
            have_mag = true;
          } else if (fk == "target") {
            if (!fit->is_number_integer()) throw ConfigError("faults.target", "must be an integer", fline);
            fi.target = fit->get<int>();
          } else {
            throw ConfigError("faults." + fk, "unknown key", fline);
          }
        }
        if (!have_kind || !have_start || !have_mag)
          throw ConfigError(name, "each fault needs kind, start_hour and magnitude", line);
        c.faults.push_back(fi);
      }
      continue;
    }
    const detail::Key* key = nullptr;
    for (const auto& k : detail::keys())
      if (k.name == name) key = &k;
    if (!key) throw ConfigError(name, "unknown key", line);
    if (!detail::type_ok(key->kind, *it)) throw ConfigError(name, std::string("must be ") + detail::kind_name(key->kind), line);
    if (key->kind == Kind::integer) {
      const bool wide = name == "seed" || name == "auth_window_sec";
      if (it->is_number_unsigned() && it->get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw ConfigError(name, "out of range", line);
      const std::int64_t x = it->get<std::int64_t>();
      if (!wide && (x > std::numeric_limits<int>::max() || x < std::numeric_limits<int>::min()))
        throw ConfigError(name, "out of range", line);
    }
    try {
      key->set(c, *it);
    } catch (const ConfigError& e) {
      throw ConfigError(e.field(), e.reason(), line);
    }
  }
  c.governance.inventory.lead_time = c.station.delivery_lead_time;
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), e.reason(), detail::line_of_key(text, e.field()));
  }
  c.digest = config_digest(c);
  return c;
}

inline ScenarioConfig default_config() { return parse_config("{}"); }

}  // namespace fuelsim::config

#endif  // FUELSIM_CONFIG_SCENARIO_HPP
