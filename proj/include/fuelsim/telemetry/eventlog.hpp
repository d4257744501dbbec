#ifndef FUELSIM_TELEMETRY_EVENTLOG_HPP
#define FUELSIM_TELEMETRY_EVENTLOG_HPP

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fuelsim/core/error.hpp"
#include "fuelsim/monitor/alert.hpp"
#include "fuelsim/ops/governance.hpp"
#include "fuelsim/ops/kpi.hpp"
#include "fuelsim/sim/episode.hpp"
#include "fuelsim/telemetry/wire.hpp"

namespace fuelsim::telemetry {

inline constexpr std::int64_t kFormatVersion = 1;

struct LogHeader {
  std::int64_t format_version = kFormatVersion;
  std::uint64_t config_digest = 0;
  std::int64_t seed = 0;
  Volume initial_tank{};
  std::int64_t holding_mc_per_gal_day = 200;
  bool operator==(const LogHeader&) const = default;
};

inline std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, d);
  return buf;
}

inline std::optional<std::uint64_t> parse_digest_hex(const std::string& s) {
  if (s.size() != 16) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else return std::nullopt;
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

// ---- record builders ---------------------------------------------------------

inline TelemetryRecord header_record(const LogHeader& h) {
  return make_record(0, 0, Stream::header,
                     {{"format_version", h.format_version},
                      {"config_digest", digest_hex(h.config_digest)},
                      {"seed", h.seed},
                      {"initial_tank_mgal", h.initial_tank.raw},
                      {"holding_mc_gal_day", h.holding_mc_per_gal_day}});
}

inline LogHeader header_from(const TelemetryRecord& r) {
  if (r.stream != Stream::header) throw Error("event log: first record is not a header");
  LogHeader h;
  h.format_version = r.i("format_version");
  if (h.format_version != kFormatVersion)
    throw Error("event log: format_version " + std::to_string(h.format_version) + " is not supported (expected " +
                std::to_string(kFormatVersion) + ")");
  const auto d = parse_digest_hex(r.s("config_digest"));
  if (!d) throw Error("event log: config_digest is not 16 lowercase hex digits");
  h.config_digest = *d;
  h.seed = r.i("seed");
  h.initial_tank = Volume{r.i("initial_tank_mgal")};
  h.holding_mc_per_gal_day = r.i("holding_mc_gal_day");
  return h;
}

inline TelemetryRecord tank_record(std::int64_t seq, const sim::HourRecord& h) {
  return make_record(seq, h.hour, Stream::tank,
                     {{"level_mgal", h.gauge_level.raw},
                      {"temp_cdeg", h.tank_temp_cdeg},
                      {"sales_mgal", h.gallons_sold.raw},
                      {"deliv_mgal", h.delivered.raw}});
}

inline TelemetryRecord price_record(std::int64_t seq, const sim::HourRecord& h) {
  return make_record(seq, h.hour, Stream::price,
                     {{"posted_cpg", h.posted_price.raw},
                      {"wholesale_cpg", h.exo.wholesale_cents().raw},
                      {"competitor_cpg", h.exo.competitor_cents().raw},
                      {"clamped", std::int64_t{h.price_clamped}},
                      {"weather_milli", std::llround(h.exo.weather_index * 1000.0)},
                      {"traffic_milli", std::llround(h.exo.traffic_index * 1000.0)},
                      {"hod", std::int64_t{h.exo.hour_of_day}},
                      {"dow", std::int64_t{h.exo.day_of_week}},
                      {"event", std::int64_t{h.exo.event_flag}},
                      {"event_left", std::int64_t{h.exo.event_hours_left}},
                      {"fcst_mgal", h.forecast ? h.forecast->raw : std::int64_t{-1}},
                      {"book_mgal", h.tank_level.raw},
                      {"leak_mgal", h.leaked.raw}});
}

inline std::string_view to_string(sim::VisitKind k) {
  switch (k) {
    case sim::VisitKind::fuel: return "fuel";
    case sim::VisitKind::shop_only: return "shop_only";
    case sim::VisitKind::turned_away: return "turned_away";
    case sim::VisitKind::unauthorized: return "unauthorized";
  }
  return "?";
}

inline std::optional<sim::VisitKind> parse_visit_kind(std::string_view s) {
  for (auto k : {sim::VisitKind::fuel, sim::VisitKind::shop_only, sim::VisitKind::turned_away, sim::VisitKind::unauthorized})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline TelemetryRecord visit_record(std::int64_t seq, const sim::CustomerVisit& v) {
  return make_record(seq, v.hour, Stream::visit,
                     {{"kind", std::string(to_string(v.kind))},
                      {"user", v.user_id},
                      {"off_ms", v.offset_ms},
                      {"gal_mgal", v.gallons.raw},
                      {"paid_cpg", v.price_paid.raw},
                      {"basket", std::vector<std::int64_t>(v.basket.begin(), v.basket.end())},
                      {"chk_ms", v.checkout_ms},
                      {"disp", std::int64_t{v.dispenser}},
                      {"auth_s", v.auth_sec},
                      {"flow_s", v.flow_sec}});
}

inline sim::CustomerVisit visit_from(const TelemetryRecord& r) {
  sim::CustomerVisit v;
  v.hour = r.t;
  const auto kind = parse_visit_kind(r.s("kind"));
  if (!kind) throw Error("visit record seq " + std::to_string(r.seq) + ": unknown kind '" + r.s("kind") + "'");
  v.kind = *kind;
  v.user_id = r.i("user");
  v.offset_ms = r.i("off_ms");
  v.gallons = Volume{r.i("gal_mgal")};
  v.price_paid = Price{r.i("paid_cpg")};
  for (std::int64_t item : r.a("basket")) v.basket.push_back(static_cast<int>(item));
  v.checkout_ms = r.i("chk_ms");
  v.dispenser = static_cast<int>(r.i("disp"));
  v.auth_sec = r.i("auth_s");
  v.flow_sec = r.i("flow_s");
  return v;
}

inline TelemetryRecord order_record(std::int64_t seq, const sim::OrderEvent& e) {
  return make_record(seq, e.time, Stream::order,
                     {{"kind", std::string(e.kind == sim::OrderEventKind::placed ? "placed" : "delivered")},
                      {"id", e.order_id},
                      {"qty_mgal", e.quantity.raw},
                      {"arrival", e.arrival}});
}

inline sim::OrderEvent order_from(const TelemetryRecord& r) {
  sim::OrderEvent e;
  const std::string& k = r.s("kind");
  if (k == "placed") e.kind = sim::OrderEventKind::placed;
  else if (k == "delivered") e.kind = sim::OrderEventKind::delivered;
  else throw Error("order record seq " + std::to_string(r.seq) + ": unknown kind '" + k + "'");
  e.order_id = r.i("id");
  e.time = r.t;
  e.quantity = Volume{r.i("qty_mgal")};
  e.arrival = r.i("arrival");
  return e;
}

inline std::string frame_file_name(const sim::VibrationFrame& f) {
  return "d" + std::to_string(f.dispenser) + "_h" + std::to_string(f.hour) + ".vib";
}

inline TelemetryRecord frame_ref_record(std::int64_t seq, const sim::VibrationFrame& f) {
  return make_record(seq, f.hour, Stream::vibration_frame_ref,
                     {{"disp", std::int64_t{f.dispenser}},
                      {"file", frame_file_name(f)},
                      {"samples", static_cast<std::int64_t>(f.samples.size())},
                      {"rate_hz", std::llround(f.sample_rate)},
                      {"counts_per_unit", std::llround(f.counts_per_unit)}});
}

inline TelemetryRecord vehicle_record(std::int64_t seq, const sim::VehicleReading& v) {
  return make_record(seq, v.hour, Stream::vehicle,
                     {{"vehicle", std::int64_t{v.vehicle}}, {"volts_mv", v.volts_mv}, {"tire_cpsi", v.tire_cpsi}});
}

inline TelemetryRecord alert_record(std::int64_t seq, const monitor::Alert& a) {
  return make_record(seq, a.timestamp, Stream::alert,
                     {{"asset", wire_sanitize(a.asset_id)},
                      {"kind", std::string(monitor::to_string(a.kind))},
                      {"severity", std::string(monitor::to_string(a.severity))},
                      {"cost_mc", a.estimated_cost.raw},
                      {"detail", wire_sanitize(a.detail)}});
}

inline monitor::Alert alert_from(const TelemetryRecord& r) {
  monitor::Alert a;
  a.asset_id = r.s("asset");
  const auto kind = monitor::parse_alert_kind(r.s("kind"));
  const auto sev = monitor::parse_severity(r.s("severity"));
  if (!kind || !sev) throw Error("alert record seq " + std::to_string(r.seq) + ": unknown kind or severity");
  a.kind = *kind;
  a.severity = *sev;
  a.timestamp = r.t;
  a.estimated_cost = Money{r.i("cost_mc")};
  a.detail = r.s("detail");
  return a;
}

inline std::int64_t narrow_int128(__int128 v, const char* what) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw Error(std::string(what) + " does not fit the wire integer range");
  return static_cast<std::int64_t>(v);
}

inline TelemetryRecord kpi_record(std::int64_t seq, const ops::KpiReport& k) {
  return make_record(seq, k.first_hour, Stream::kpi,
                     {{"end_hour", k.end_hour},
                      {"margin_mc", k.total_margin.raw},
                      {"revenue_mc", k.revenue.raw},
                      {"sales_mgal", k.gallons_sold.raw},
                      {"stockouts", k.stockout_customers},
                      {"holding_mc", k.holding_cost_total.raw},
                      {"fueling", k.fueling_visits},
                      {"baskets", k.basket_visits},
                      {"checkouts", k.checkouts},
                      {"chk_ms", k.checkout_ms_total},
                      {"fcst_n", k.forecast_points},
                      {"fcst_sq_mgal2", narrow_int128(k.forecast_sq_err_mgal2, "forecast squared error")},
                      {"alerts", std::vector<std::int64_t>(k.alerts_by_kind.begin(), k.alerts_by_kind.end())}});
}

inline ops::KpiReport kpi_from(const TelemetryRecord& r) {
  ops::KpiReport k;
  k.first_hour = r.t;
  k.end_hour = r.i("end_hour");
  k.total_margin = Money{r.i("margin_mc")};
  k.revenue = Money{r.i("revenue_mc")};
  k.gallons_sold = Volume{r.i("sales_mgal")};
  k.stockout_customers = r.i("stockouts");
  k.holding_cost_total = Money{r.i("holding_mc")};
  k.fueling_visits = r.i("fueling");
  k.basket_visits = r.i("baskets");
  k.checkouts = r.i("checkouts");
  k.checkout_ms_total = r.i("chk_ms");
  k.forecast_points = r.i("fcst_n");
  k.forecast_sq_err_mgal2 = r.i("fcst_sq_mgal2");
  const auto& al = r.a("alerts");
  if (al.size() != k.alerts_by_kind.size())
    throw Error("kpi record seq " + std::to_string(r.seq) + ": expected " + std::to_string(k.alerts_by_kind.size()) +
                " alert counts");
  for (std::size_t i = 0; i < al.size(); ++i) k.alerts_by_kind[i] = al[i];
  return k;
}

// ---- vibration sidecars ------------------------------------------------------

/// Sidecar layout: "VIB1", u32 little-endian sample count, then int16 little-endian samples.
inline void write_vib(const std::filesystem::path& path, const std::vector<std::int16_t>& samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  std::string buf = "VIB1";
  const auto n = static_cast<std::uint32_t>(samples.size());
  for (int b = 0; b < 4; ++b) buf += static_cast<char>((n >> (8 * b)) & 0xFF);
  for (std::int16_t s : samples) {
    const auto u = static_cast<std::uint16_t>(s);
    buf += static_cast<char>(u & 0xFF);
    buf += static_cast<char>(u >> 8);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<std::int16_t> read_vib(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || bytes.compare(0, 4, "VIB1") != 0) throw ParseError(0, "missing VIB1 magic");
  std::uint32_t n = 0;
  for (int b = 0; b < 4; ++b) n |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 + static_cast<std::size_t>(b)])) << (8 * b);
  if (bytes.size() != 8 + 2 * static_cast<std::size_t>(n))
    throw ParseError(8, "sample count " + std::to_string(n) + " disagrees with file size " + std::to_string(bytes.size()));
  std::vector<std::int16_t> out(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto lo = static_cast<unsigned char>(bytes[8 + 2 * i]);
    const auto hi = static_cast<unsigned char>(bytes[9 + 2 * i]);
    out[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
  }
  return out;
}

// ---- writer ------------------------------------------------------------------

/// Streams a governed run to the event log. Per hour: price, tank, then each
/// visit preceded by its auth and dispenser_flow records. Orders as they occur.
/// Per day: vibration frame refs, vehicles, alerts, kpi.
class EventLogWriter final : public ops::GovernanceListener {
 public:
  /// `frames_dir` empty means frames are referenced but no sidecar is written.
  EventLogWriter(std::ostream& out, std::filesystem::path frames_dir, const LogHeader& header)
      : out_(out), frames_dir_(std::move(frames_dir)) {
    if (!frames_dir_.empty()) std::filesystem::create_directories(frames_dir_);
    out_ << encode_record(header_record(header));
  }

  void on_hour(const sim::HourRecord& h, std::span<const sim::CustomerVisit> visits) override {
    emit(price_record(next(), h));
    emit(tank_record(next(), h));
    for (const auto& v : visits) {
      if (v.auth_sec >= 0)
        emit(make_record(next(), v.hour, Stream::auth, {{"disp", std::int64_t{v.dispenser}}, {"sec", v.auth_sec}}));
      if (v.flow_sec >= 0)
        emit(make_record(next(), v.hour, Stream::dispenser_flow,
                         {{"disp", std::int64_t{v.dispenser}}, {"sec", v.flow_sec}, {"gal_mgal", v.gallons.raw}}));
      emit(visit_record(next(), v));
    }
  }

  void on_order(const sim::OrderEvent& e) override { emit(order_record(next(), e)); }

  void on_day(const sim::DaySensors& sensors, const ops::DayOutcome& day) override {
    for (const auto& f : sensors.frames) {
      if (!frames_dir_.empty()) write_vib(frames_dir_ / frame_file_name(f), f.samples);
      emit(frame_ref_record(next(), f));
    }
    for (const auto& v : sensors.vehicles) emit(vehicle_record(next(), v));
    for (const auto& a : day.alerts) emit(alert_record(next(), a));
    emit(kpi_record(next(), day.kpi));
  }

  std::int64_t records_written() const { return seq_; }

 private:
  std::int64_t next() { return ++seq_; }
  void emit(const TelemetryRecord& r) { out_ << encode_record(r); }

  std::ostream& out_;
  std::filesystem::path frames_dir_;
  std::int64_t seq_ = 0;
};

// ---- reader ------------------------------------------------------------------

struct EventLog {
  LogHeader header;
  std::vector<TelemetryRecord> records;  // body, header excluded
};

/// Splits and decodes a whole log. Offsets in errors are absolute byte positions.
inline EventLog parse_event_log(std::string_view bytes) {
  EventLog log;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::optional<std::int64_t> prev_seq;
  bool have_header = false;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    ++line_no;
    if (nl == std::string_view::npos) throw ParseError(bytes.size(), "line " + std::to_string(line_no) + ": missing line feed");
    const std::string_view line = bytes.substr(pos, nl - pos);
    TelemetryRecord r;
    try {
      r = decode_record(line);
    } catch (const ParseError& e) {
      throw ParseError(pos + e.offset(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::int64_t seq = r.seq;
    if (!have_header) {
      log.header = header_from(r);
      have_header = true;
    } else {
      if (r.stream == Stream::header) throw ParseError(pos, "line " + std::to_string(line_no) + ": second header");
      log.records.push_back(std::move(r));
    }
    if (prev_seq && seq <= *prev_seq)
      throw ParseError(pos, "line " + std::to_string(line_no) + ": seq " + std::to_string(seq) + " does not follow seq " +
                                std::to_string(*prev_seq));
    prev_seq = seq;
    pos = nl + 1;
  }
  if (!have_header) throw Error("event log: missing header");
  return log;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// ---- replay ------------------------------------------------------------------

struct ReplayResult {
  LogHeader header;
  sim::EpisodeLog log;
  std::vector<monitor::Alert> alerts;
  std::vector<ops::KpiReport> embedded;    // kpi records found in the log
  std::vector<ops::KpiReport> recomputed;  // the same periods, recomputed from the rebuilt episode

  /// Index of the first KPI row that differs, if any.
  std::optional<std::size_t> first_mismatch() const {
    for (std::size_t i = 0; i < embedded.size(); ++i)
      if (!(embedded[i] == recomputed[i])) return i;
    return std::nullopt;
  }
};

/// Rebuilds the hourly episode from price, tank and visit records, then
/// recomputes every embedded KPI period from it.
inline ReplayResult replay(const EventLog& ev) {
  ReplayResult out;
  out.header = ev.header;
  out.log.config_digest = ev.header.config_digest;
  out.log.seed = static_cast<std::uint64_t>(ev.header.seed);
  out.log.initial_tank = ev.header.initial_tank;

  auto fail = [](const TelemetryRecord& r, const std::string& what) -> Error {
    return Error("replay: seq " + std::to_string(r.seq) + ": " + what);
  };
  bool open_hour = false;  // a price record began the hour, tank not yet seen
  std::vector<TelemetryRecord> kpis;
  for (const TelemetryRecord& r : ev.records) {
    switch (r.stream) {
      case Stream::price: {
        if (open_hour) throw fail(r, "price record before the previous hour's tank record");
        if (r.t != static_cast<std::int64_t>(out.log.hours.size())) throw fail(r, "hours are not consecutive");
        sim::HourRecord h;
        h.hour = r.t;
        h.posted_price = Price{r.i("posted_cpg")};
        h.exo.wholesale_cost = static_cast<double>(r.i("wholesale_cpg")) / 100.0;
        h.exo.competitor_price = static_cast<double>(r.i("competitor_cpg")) / 100.0;
        h.price_clamped = r.i("clamped") != 0;
        h.exo.weather_index = static_cast<double>(r.i("weather_milli")) / 1000.0;
        h.exo.traffic_index = static_cast<double>(r.i("traffic_milli")) / 1000.0;
        h.exo.hour_of_day = static_cast<int>(r.i("hod"));
        h.exo.day_of_week = static_cast<int>(r.i("dow"));
        h.exo.event_flag = r.i("event") != 0;
        h.exo.event_hours_left = static_cast<int>(r.i("event_left"));
        if (r.i("fcst_mgal") >= 0) h.forecast = Volume{r.i("fcst_mgal")};
        h.tank_level = Volume{r.i("book_mgal")};
        h.leaked = Volume{r.i("leak_mgal")};
        out.log.hours.push_back(h);
        open_hour = true;
        break;
      }
      case Stream::tank: {
        if (!open_hour || out.log.hours.back().hour != r.t) throw fail(r, "tank record without its price record");
        sim::HourRecord& h = out.log.hours.back();
        h.gauge_level = Volume{r.i("level_mgal")};
        h.tank_temp_cdeg = r.i("temp_cdeg");
        h.gallons_sold = Volume{r.i("sales_mgal")};
        h.delivered = Volume{r.i("deliv_mgal")};
        open_hour = false;
        break;
      }
      case Stream::visit: {
        if (out.log.hours.empty() || out.log.hours.back().hour != r.t) throw fail(r, "visit outside its hour");
        sim::CustomerVisit v = visit_from(r);
        sim::HourRecord& h = out.log.hours.back();
        ++h.visits;
        if (v.kind == sim::VisitKind::fuel) ++h.fueling_visits;
        if (v.kind == sim::VisitKind::turned_away) ++h.turned_away;
        h.revenue += v.revenue();
        out.log.visits.push_back(std::move(v));
        break;
      }
      case Stream::order: out.log.orders.push_back(order_from(r)); break;
      case Stream::alert: out.alerts.push_back(alert_from(r)); break;
      case Stream::kpi: kpis.push_back(r); break;
      case Stream::header: throw fail(r, "unexpected header");
      default: break;  // auth, dispenser_flow, vibration_frame_ref, vehicle carry nothing the episode needs
    }
  }
  if (open_hour) throw Error("replay: log ends between an hour's price and tank records");

  // Metered sales must agree with the visits of each hour.
  {
    std::size_t vi = 0;
    for (sim::HourRecord& h : out.log.hours) {
      Volume sold{};
      for (; vi < out.log.visits.size() && out.log.visits[vi].hour == h.hour; ++vi) sold += out.log.visits[vi].gallons;
      if (sold != h.gallons_sold)
        throw Error("replay: hour " + std::to_string(h.hour) + " tank sales disagree with its visits");
    }
  }
  for (const auto& a : out.alerts) {
    if (a.timestamp < 0 || a.timestamp >= static_cast<std::int64_t>(out.log.hours.size()))
      throw Error("replay: alert at hour " + std::to_string(a.timestamp) + " is outside the episode");
    ++out.log.hours[static_cast<std::size_t>(a.timestamp)].alerts;
  }

  const ops::KpiParams kp{ev.header.holding_mc_per_gal_day};
  for (const TelemetryRecord& r : kpis) {
    ops::KpiReport k = kpi_from(r);
    out.embedded.push_back(k);
    out.recomputed.push_back(ops::emit_kpi_report(out.log, {k.first_hour, k.end_hour}, out.alerts, kp));
  }
  return out;
}

inline ReplayResult replay_bytes(std::string_view bytes) { return replay(parse_event_log(bytes)); }

}  // namespace fuelsim::telemetry

#endif  // FUELSIM_TELEMETRY_EVENTLOG_HPP
