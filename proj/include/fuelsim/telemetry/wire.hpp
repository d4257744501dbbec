#ifndef FUELSIM_TELEMETRY_WIRE_HPP
#define FUELSIM_TELEMETRY_WIRE_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fuelsim/core/error.hpp"

// Wire format: one object per line, terminated by a single '\n'.
//   {"seq":<int>,"t":<int>,"stream":"<name>",<payload>}
// Payload keys follow the per-stream schema below, in that order, with nothing
// omitted or added. Values are decimal integers (-?(0|[1-9][0-9]*), int64),
// strings of printable ASCII without '"' or '\', or arrays of integers.
// There is no whitespace and no escaping. Reals travel as scaled integers:
//   *_mgal   gallons x 1000         *_cpg   cents per gallon
//   *_mc     dollars x 100000       *_cdeg  degrees C x 100
//   *_milli  index x 1000           *_mv    volts x 1000
//   *_cpsi   psi x 100              *_ms / *_s  milliseconds / seconds

namespace fuelsim::telemetry {

enum class Stream {
  header,
  tank,
  dispenser_flow,
  auth,
  vibration_frame_ref,
  vehicle,
  visit,
  price,
  order,
  alert,
  kpi,
};

inline constexpr int kStreams = 11;

enum class FieldType { integer, string, int_array };

struct FieldSpec {
  std::string_view key;
  FieldType type;
};

namespace detail {
using enum FieldType;
inline constexpr FieldSpec kHeader[] = {{"format_version", integer}, {"config_digest", string}, {"seed", integer},
                                        {"initial_tank_mgal", integer}, {"holding_mc_gal_day", integer}};
inline constexpr FieldSpec kTank[] = {
    {"level_mgal", integer}, {"temp_cdeg", integer}, {"sales_mgal", integer}, {"deliv_mgal", integer}};
inline constexpr FieldSpec kFlow[] = {{"disp", integer}, {"sec", integer}, {"gal_mgal", integer}};
inline constexpr FieldSpec kAuth[] = {{"disp", integer}, {"sec", integer}};
inline constexpr FieldSpec kFrameRef[] = {
    {"disp", integer}, {"file", string}, {"samples", integer}, {"rate_hz", integer}, {"counts_per_unit", integer}};
inline constexpr FieldSpec kVehicle[] = {{"vehicle", integer}, {"volts_mv", int_array}, {"tire_cpsi", int_array}};
inline constexpr FieldSpec kVisit[] = {{"kind", string},    {"user", integer},    {"off_ms", integer},
                                       {"gal_mgal", integer}, {"paid_cpg", integer}, {"basket", int_array},
                                       {"chk_ms", integer},  {"disp", integer},    {"auth_s", integer},
                                       {"flow_s", integer}};
inline constexpr FieldSpec kPrice[] = {{"posted_cpg", integer},     {"wholesale_cpg", integer}, {"competitor_cpg", integer},
                                       {"clamped", integer},        {"weather_milli", integer}, {"traffic_milli", integer},
                                       {"hod", integer},            {"dow", integer},           {"event", integer},
                                       {"event_left", integer},     {"fcst_mgal", integer},     {"book_mgal", integer},
                                       {"leak_mgal", integer}};
inline constexpr FieldSpec kOrder[] = {{"kind", string}, {"id", integer}, {"qty_mgal", integer}, {"arrival", integer}};
inline constexpr FieldSpec kAlert[] = {
    {"asset", string}, {"kind", string}, {"severity", string}, {"cost_mc", integer}, {"detail", string}};
inline constexpr FieldSpec kKpi[] = {{"end_hour", integer},   {"margin_mc", integer}, {"revenue_mc", integer},
                                     {"sales_mgal", integer}, {"stockouts", integer}, {"holding_mc", integer},
                                     {"fueling", integer},    {"baskets", integer},   {"checkouts", integer},
                                     {"chk_ms", integer},     {"fcst_n", integer},    {"fcst_sq_mgal2", integer},
                                     {"alerts", int_array}};
}  // namespace detail

inline std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::header: return "header";
    case Stream::tank: return "tank";
    case Stream::dispenser_flow: return "dispenser_flow";
    case Stream::auth: return "auth";
    case Stream::vibration_frame_ref: return "vibration_frame_ref";
    case Stream::vehicle: return "vehicle";
    case Stream::visit: return "visit";
    case Stream::price: return "price";
    case Stream::order: return "order";
    case Stream::alert: return "alert";
    case Stream::kpi: return "kpi";
  }
  throw Error("unknown stream " + std::to_string(static_cast<int>(s)));
}

inline std::optional<Stream> parse_stream(std::string_view name) {
  for (int i = 0; i < kStreams; ++i)
    if (stream_name(static_cast<Stream>(i)) == name) return static_cast<Stream>(i);
  return std::nullopt;
}

inline std::span<const FieldSpec> schema(Stream s) {
  switch (s) {
    case Stream::header: return detail::kHeader;
    case Stream::tank: return detail::kTank;
    case Stream::dispenser_flow: return detail::kFlow;
    case Stream::auth: return detail::kAuth;
    case Stream::vibration_frame_ref: return detail::kFrameRef;
    case Stream::vehicle: return detail::kVehicle;
    case Stream::visit: return detail::kVisit;
    case Stream::price: return detail::kPrice;
    case Stream::order: return detail::kOrder;
    case Stream::alert: return detail::kAlert;
    case Stream::kpi: return detail::kKpi;
  }
  throw Error("unknown stream " + std::to_string(static_cast<int>(s)));
}

using Value = std::variant<std::int64_t, std::string, std::vector<std::int64_t>>;

struct TelemetryRecord {
  std::int64_t seq = 0;
  std::int64_t t = 0;  // simulation hour
  Stream stream = Stream::tank;
  std::vector<Value> payload;  // schema order

  std::size_t index_of(std::string_view key) const {
    const auto sc = schema(stream);
    for (std::size_t i = 0; i < sc.size(); ++i)
      if (sc[i].key == key) return i;
    throw Error("stream " + std::string(stream_name(stream)) + " has no field " + std::string(key));
  }
  std::int64_t i(std::string_view key) const { return std::get<std::int64_t>(payload.at(index_of(key))); }
  const std::string& s(std::string_view key) const { return std::get<std::string>(payload.at(index_of(key))); }
  const std::vector<std::int64_t>& a(std::string_view key) const {
    return std::get<std::vector<std::int64_t>>(payload.at(index_of(key)));
  }

  bool operator==(const TelemetryRecord&) const = default;
};

/// Builds a record from (key, value) pairs given in any order; the wire order comes from the schema.
inline TelemetryRecord make_record(std::int64_t seq, std::int64_t t, Stream stream,
                                   std::initializer_list<std::pair<std::string_view, Value>> fields) {
  TelemetryRecord r{seq, t, stream, {}};
  const auto sc = schema(stream);
  r.payload.resize(sc.size());
  std::vector<bool> seen(sc.size(), false);
  for (const auto& [k, v] : fields) {
    const std::size_t i = r.index_of(k);
    if (seen[i]) throw Error("duplicate field " + std::string(k));
    seen[i] = true;
    r.payload[i] = v;
  }
  for (std::size_t i = 0; i < sc.size(); ++i)
    if (!seen[i]) throw Error("stream " + std::string(stream_name(stream)) + " missing field " + std::string(sc[i].key));
  return r;
}

inline bool wire_safe(std::string_view s) {
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u > 0x7E || c == '"' || c == '\\') return false;
  }
  return true;
}

/// Replaces characters the wire cannot carry with '?'.
inline std::string wire_sanitize(std::string s) {
  for (char& c : s)
    if (!wire_safe(std::string_view(&c, 1))) c = '?';
  return s;
}

// ---- encode ------------------------------------------------------------------

inline void append_int(std::string& out, std::int64_t v) { out += std::to_string(v); }

inline std::string encode_record(const TelemetryRecord& r) {
  const auto sc = schema(r.stream);
  if (r.payload.size() != sc.size())
    throw Error("encode_record: stream " + std::string(stream_name(r.stream)) + " expects " +
                std::to_string(sc.size()) + " fields, got " + std::to_string(r.payload.size()));
  std::string out;
  out.reserve(64 + 16 * sc.size());
  out += "{\"seq\":";
  append_int(out, r.seq);
  out += ",\"t\":";
  append_int(out, r.t);
  out += ",\"stream\":\"";
  out += stream_name(r.stream);
  out += '"';
  for (std::size_t i = 0; i < sc.size(); ++i) {
    out += ",\"";
    out += sc[i].key;
    out += "\":";
    const Value& v = r.payload[i];
    switch (sc[i].type) {
      case FieldType::integer:
        if (!std::holds_alternative<std::int64_t>(v)) throw Error("encode_record: field " + std::string(sc[i].key) + " must be an integer");
        append_int(out, std::get<std::int64_t>(v));
        break;
      case FieldType::string: {
        if (!std::holds_alternative<std::string>(v)) throw Error("encode_record: field " + std::string(sc[i].key) + " must be a string");
        const std::string& s = std::get<std::string>(v);
        if (!wire_safe(s)) throw Error("encode_record: field " + std::string(sc[i].key) + " has a character outside the wire set");
        out += '"';
        out += s;
        out += '"';
        break;
      }
      case FieldType::int_array: {
        if (!std::holds_alternative<std::vector<std::int64_t>>(v))
          throw Error("encode_record: field " + std::string(sc[i].key) + " must be an integer array");
        out += '[';
        bool first = true;
        for (std::int64_t x : std::get<std::vector<std::int64_t>>(v)) {
          if (!first) out += ',';
          first = false;
          append_int(out, x);
        }
        out += ']';
        break;
      }
    }
  }
  out += "}\n";
  return out;
}

// ---- decode ------------------------------------------------------------------

class LineParser {
 public:
  explicit LineParser(std::string_view line) : s_(line) {}

  [[noreturn]] void fail(const std::string& why) const { throw ParseError(pos_, why); }

  void expect(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) fail("expected '" + std::string(lit) + "'");
    pos_ += lit.size();
  }

  std::int64_t integer() {
    const std::size_t start = pos_;
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      ++pos_;
    }
    if (!is_digit(peek())) fail("expected digit");
    if (peek() == '0' && is_digit(peek(1))) fail("leading zero");
    std::uint64_t mag = 0;
    const std::uint64_t limit =
        neg ? static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) + 1
            : static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    while (is_digit(peek())) {
      const auto d = static_cast<std::uint64_t>(s_[pos_] - '0');
      if (mag > (limit - d) / 10) {
        pos_ = start;
        fail("integer out of range");
      }
      mag = mag * 10 + d;
      ++pos_;
    }
    if (neg && mag == 0) {
      pos_ = start;
      fail("negative zero");
    }
    if (neg) return mag == limit ? std::numeric_limits<std::int64_t>::min() : -static_cast<std::int64_t>(mag);
    return static_cast<std::int64_t>(mag);
  }

  std::string string() {
    expect("\"");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      const auto u = static_cast<unsigned char>(s_[pos_]);
      if (u < 0x20 || u > 0x7E || s_[pos_] == '\\') fail("character outside the wire set");
      ++pos_;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    std::string out(s_.substr(start, pos_ - start));
    ++pos_;
    return out;
  }

  std::vector<std::int64_t> int_array() {
    expect("[");
    std::vector<std::int64_t> out;
    if (peek() == ']') {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(integer());
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect("]");
      return out;
    }
  }

  void key(std::string_view k) {
    expect("\"");
    expect(k);
    expect("\":");
  }

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == s_.size(); }

 private:
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  std::string_view s_;
  std::size_t pos_ = 0;
};

/// Strict inverse of encode_record. `line` may or may not include the final '\n';
/// anything else that is not canonical is rejected with the byte offset.
inline TelemetryRecord decode_record(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  LineParser p(line);
  TelemetryRecord r;
  p.expect("{");
  p.key("seq");
  r.seq = p.integer();
  p.expect(",");
  p.key("t");
  r.t = p.integer();
  p.expect(",");
  p.key("stream");
  const std::size_t name_at = p.pos();
  const std::string name = p.string();
  const auto st = parse_stream(name);
  if (!st) throw ParseError(name_at, "unknown stream '" + name + "'");
  r.stream = *st;
  for (const FieldSpec& f : schema(r.stream)) {
    p.expect(",");
    p.key(f.key);
    switch (f.type) {
      case FieldType::integer: r.payload.emplace_back(p.integer()); break;
      case FieldType::string: r.payload.emplace_back(p.string()); break;
      case FieldType::int_array: r.payload.emplace_back(p.int_array()); break;
    }
  }
  p.expect("}");
  if (!p.at_end()) p.fail("trailing bytes after record");
  return r;
}

}  // namespace fuelsim::telemetry

#endif  // FUELSIM_TELEMETRY_WIRE_HPP
