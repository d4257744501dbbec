#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fuelsim/app/experiments.hpp"

using namespace fuelsim;
using namespace fuelsim::telemetry;

namespace {

constexpr const char* kGoldenTank =
    "{\"seq\":1,\"t\":0,\"stream\":\"tank\",\"level_mgal\":8000000,\"temp_cdeg\":1500,\"sales_mgal\":0,\"deliv_mgal\":0}\n";

std::string short_run_log(int days, std::uint64_t seed, ops::GovernedRun* run_out = nullptr) {
  auto cfg = config::parse_config("{\"horizon_days\":" + std::to_string(days) + ",\"seed\":" + std::to_string(seed) + "}");
  std::ostringstream os;
  auto run = app::simulate(cfg, config::PricingChoice::fixed_margin, os, {}, nullptr);
  if (run_out) *run_out = std::move(run);
  return os.str();
}

std::vector<std::string> split_lines(const std::string& bytes) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t nl = bytes.find('\n', pos);
    out.push_back(bytes.substr(pos, nl + 1 - pos));
    pos = nl + 1;
  }
  return out;
}

std::string random_wire_string(Rng64& rng) {
  std::string s;
  const auto n = rng.below(12);
  for (std::uint64_t i = 0; i < n; ++i) {
    char c;
    do {
      c = static_cast<char>(0x20 + rng.below(0x7F - 0x20));
    } while (c == '"' || c == '\\');
    s += c;
  }
  return s;
}

std::int64_t random_int(Rng64& rng) {
  switch (rng.below(4)) {
    case 0: return static_cast<std::int64_t>(rng.below(10));
    case 1: return -static_cast<std::int64_t>(rng.below(1'000'000));
    case 2: return static_cast<std::int64_t>(rng.next());
    default: return rng.bernoulli(0.5) ? std::numeric_limits<std::int64_t>::min() : std::numeric_limits<std::int64_t>::max();
  }
}

TelemetryRecord random_record(Rng64& rng, std::int64_t seq) {
  TelemetryRecord r;
  r.seq = seq;
  r.t = static_cast<std::int64_t>(rng.below(100000));
  r.stream = static_cast<Stream>(rng.below(kStreams));
  for (const FieldSpec& f : schema(r.stream)) {
    switch (f.type) {
      case FieldType::integer: r.payload.emplace_back(random_int(rng)); break;
      case FieldType::string: r.payload.emplace_back(random_wire_string(rng)); break;
      case FieldType::int_array: {
        std::vector<std::int64_t> a(rng.below(6));
        for (auto& x : a) x = random_int(rng);
        r.payload.emplace_back(std::move(a));
        break;
      }
    }
  }
  return r;
}

}  // namespace

TEST(Wire, GoldenTankLine) {
  sim::HourRecord h;
  h.hour = 0;
  h.gauge_level = gallons(8000.0);
  h.tank_temp_cdeg = 1500;
  EXPECT_EQ(encode_record(tank_record(1, h)), kGoldenTank);
}

TEST(Wire, DecodeGoldenTankLine) {
  const auto r = decode_record(kGoldenTank);
  EXPECT_EQ(r.seq, 1);
  EXPECT_EQ(r.t, 0);
  EXPECT_EQ(r.stream, Stream::tank);
  EXPECT_EQ(r.i("level_mgal"), 8000000);
  EXPECT_EQ(r.i("temp_cdeg"), 1500);
  EXPECT_EQ(r.i("sales_mgal"), 0);
  EXPECT_EQ(r.i("deliv_mgal"), 0);
}

TEST(Wire, ConstructionOrderIrrelevant) {
  const auto a = make_record(4, 2, Stream::order,
                             {{"kind", std::string("placed")}, {"id", std::int64_t{3}}, {"qty_mgal", std::int64_t{5}}, {"arrival", std::int64_t{26}}});
  const auto b = make_record(4, 2, Stream::order,
                             {{"arrival", std::int64_t{26}}, {"qty_mgal", std::int64_t{5}}, {"id", std::int64_t{3}}, {"kind", std::string("placed")}});
  EXPECT_EQ(encode_record(a), encode_record(b));
  EXPECT_EQ(encode_record(a), "{\"seq\":4,\"t\":2,\"stream\":\"order\",\"kind\":\"placed\",\"id\":3,\"qty_mgal\":5,\"arrival\":26}\n");
}

TEST(Wire, MakeRecordRejectsMissingAndDuplicateFields) {
  EXPECT_THROW(make_record(1, 0, Stream::auth, {{"disp", std::int64_t{1}}}), Error);
  EXPECT_THROW(make_record(1, 0, Stream::auth, {{"disp", std::int64_t{1}}, {"disp", std::int64_t{2}}, {"sec", std::int64_t{0}}}),
               Error);
  EXPECT_THROW(make_record(1, 0, Stream::auth, {{"disp", std::int64_t{1}}, {"sec", std::int64_t{0}}, {"bogus", std::int64_t{0}}}),
               Error);
}

TEST(Wire, TruncatedLineReportsOffset) {
  const std::string line(kGoldenTank);
  const std::string cut = line.substr(0, 40);
  try {
    decode_record(cut);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_LE(e.offset(), cut.size());
    EXPECT_GE(e.offset(), 30u);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
  }
}

TEST(Wire, StrictParserRejectsNonCanonicalForms) {
  const std::vector<std::string> bad{
      "{\"seq\":01,\"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}",
      "{\"seq\":1,\"t\":-0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}",
      "{\"seq\":1, \"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}",
      "{\"seq\":1,\"t\":0,\"stream\":\"auth\",\"sec\":0,\"disp\":1}",
      "{\"seq\":1,\"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0,\"x\":1}",
      "{\"seq\":1,\"t\":0,\"stream\":\"auth\",\"disp\":1.5,\"sec\":0}",
      "{\"seq\":1,\"t\":0,\"stream\":\"smoke\",\"disp\":1,\"sec\":0}",
      "{\"seq\":9223372036854775808,\"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}",
      "{\"seq\":1,\"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}\n\n",
      "{\"seq\":1,\"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}x",
  };
  for (const auto& s : bad) EXPECT_THROW(decode_record(s), ParseError) << s;
  EXPECT_NO_THROW(decode_record("{\"seq\":1,\"t\":0,\"stream\":\"auth\",\"disp\":1,\"sec\":0}"));
}

TEST(Wire, EncodeRejectsUnsafeString) {
  auto r = make_record(1, 0, Stream::alert,
                       {{"asset", std::string("a\"b")}, {"kind", std::string("leak")}, {"severity", std::string("urgent")},
                        {"cost_mc", std::int64_t{0}}, {"detail", std::string("")}});
  EXPECT_THROW(encode_record(r), Error);
  EXPECT_EQ(wire_sanitize("a\"b\\c\n"), "a?b?c?");
}

TEST(WireProperty, GeneratedRecordsRoundTrip) {
  Rng64 rng{2024};
  for (int i = 0; i < 10000; ++i) {
    const auto r = random_record(rng, i);
    const std::string line = encode_record(r);
    ASSERT_EQ(line.back(), '\n');
    ASSERT_EQ(line.find('\n'), line.size() - 1);
    const auto back = decode_record(line);
    ASSERT_EQ(back, r) << line;
    ASSERT_EQ(encode_record(back), line);
  }
}

TEST(WireProperty, MutatedLinesParseCanonicallyOrFailCleanly) {
  const auto lines = split_lines(short_run_log(2, 3));
  ASSERT_GT(lines.size(), 100u);
  Rng64 rng{77};
  int parsed = 0, rejected = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::string s = lines[rng.below(lines.size())];
    s.pop_back();
    const int edits = 1 + static_cast<int>(rng.below(3));
    for (int e = 0; e < edits && !s.empty(); ++e) {
      const auto at = static_cast<std::size_t>(rng.below(s.size()));
      switch (rng.below(3)) {
        case 0: s[at] = static_cast<char>(rng.below(256)); break;
        case 1: s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), static_cast<char>(rng.below(256))); break;
        default: s.erase(at, 1); break;
      }
    }
    try {
      const auto r = decode_record(s);
      ASSERT_EQ(encode_record(r), s + "\n");
      ++parsed;
    } catch (const ParseError& e) {
      ASSERT_LE(e.offset(), s.size());
      ++rejected;
    }
  }
  EXPECT_GT(parsed, 0);
  EXPECT_GT(rejected, 0);
}

TEST(EventLog, EmbeddedKpisMatchLiveRun) {
  ops::GovernedRun run;
  const auto bytes = short_run_log(6, 9, &run);
  const auto rep = replay_bytes(bytes);
  ASSERT_EQ(rep.embedded.size(), 6u);
  EXPECT_EQ(rep.embedded, run.kpi_rows);
  EXPECT_EQ(rep.recomputed, run.kpi_rows);
  EXPECT_FALSE(rep.first_mismatch().has_value());
  std::ostringstream live, replayed;
  ops::write_kpi_csv(live, run.kpi_rows);
  ops::write_kpi_csv(replayed, rep.recomputed);
  EXPECT_EQ(live.str(), replayed.str());
}

TEST(EventLog, ReplayRebuildsEpisodeTotals) {
  ops::GovernedRun run;
  const auto rep = replay_bytes(short_run_log(4, 10, &run));
  ASSERT_EQ(rep.log.hours.size(), run.log.hours.size());
  EXPECT_EQ(rep.log.visits, run.log.visits);
  EXPECT_EQ(rep.log.orders, run.log.orders);
  EXPECT_EQ(rep.alerts, run.alerts);
  for (std::size_t h = 0; h < run.log.hours.size(); ++h) {
    const auto& a = run.log.hours[h];
    const auto& b = rep.log.hours[h];
    EXPECT_EQ(a.revenue, b.revenue);
    EXPECT_EQ(a.gallons_sold, b.gallons_sold);
    EXPECT_EQ(a.tank_level, b.tank_level);
    EXPECT_EQ(a.gauge_level, b.gauge_level);
    EXPECT_EQ(a.delivered, b.delivered);
    EXPECT_EQ(a.leaked, b.leaked);
    EXPECT_EQ(a.posted_price, b.posted_price);
    EXPECT_EQ(a.forecast, b.forecast);
    EXPECT_EQ(a.margin(), b.margin());
  }
  EXPECT_TRUE(sim::tank_balance_holds(rep.log));
}

TEST(EventLog, EmptyBodyReplaysToEmptyEpisode) {
  LogHeader h;
  h.config_digest = 0xabcdef0123456789ULL;
  h.seed = 5;
  h.initial_tank = gallons(100.0);
  const auto rep = replay_bytes(encode_record(header_record(h)));
  EXPECT_EQ(rep.header, h);
  EXPECT_TRUE(rep.log.hours.empty());
  EXPECT_TRUE(rep.embedded.empty());
  EXPECT_EQ(rep.log.final_tank(), gallons(100.0));
}

TEST(EventLog, ReencodingEveryLineIsIdentity) {
  const auto bytes = short_run_log(3, 11);
  std::string again;
  for (const auto& line : split_lines(bytes)) again += encode_record(decode_record(line));
  EXPECT_EQ(again, bytes);
  EXPECT_EQ(replay_bytes(again).recomputed, replay_bytes(bytes).recomputed);
}

TEST(EventLog, OutOfOrderSeqNamesBoth) {
  const auto lines = split_lines(short_run_log(1, 12));
  std::string bytes;
  for (std::size_t i = 0; i < lines.size(); ++i) bytes += lines[i == 5 ? 6 : i == 6 ? 5 : i];
  try {
    parse_event_log(bytes);
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("seq 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("seq 6"), std::string::npos) << msg;
  }
}

TEST(EventLog, HeaderVersionMismatchRejected) {
  LogHeader h;
  h.format_version = 2;
  EXPECT_THROW(parse_event_log(encode_record(header_record(h))), Error);
  EXPECT_THROW(parse_event_log(std::string(kGoldenTank)), Error);
  EXPECT_THROW(parse_event_log(""), Error);
}

TEST(EventLog, ErrorsCarryAbsoluteOffsets) {
  const auto bytes = short_run_log(1, 13);
  const std::size_t second = bytes.find('\n') + 1;
  std::string broken = bytes;
  broken[second + 3] = 'X';
  try {
    parse_event_log(broken);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), second + 2);
  }
  EXPECT_THROW(parse_event_log(bytes.substr(0, bytes.size() - 1)), ParseError);
}

TEST(EventLog, TamperedSalesDetected) {
  const auto lines = split_lines(short_run_log(1, 14));
  std::string bytes;
  bool done = false;
  for (const auto& line : lines) {
    auto r = decode_record(line);
    if (!done && r.stream == Stream::tank && r.i("sales_mgal") > 0) {
      std::get<std::int64_t>(r.payload[r.index_of("sales_mgal")]) += 1;
      done = true;
    }
    bytes += encode_record(r);
  }
  ASSERT_TRUE(done);
  EXPECT_THROW(replay_bytes(bytes), Error);
}

TEST(EventLog, TamperedKpiIsReportedAsMismatch) {
  std::string bytes;
  for (const auto& line : split_lines(short_run_log(2, 15))) {
    auto r = decode_record(line);
    if (r.stream == Stream::kpi && r.t >= 24) std::get<std::int64_t>(r.payload[r.index_of("margin_mc")]) += 1;
    bytes += encode_record(r);
  }
  const auto rep = replay_bytes(bytes);
  EXPECT_EQ(rep.first_mismatch(), std::optional<std::size_t>(1));
}

TEST(Sidecar, VibRoundTripAndMagic) {
  const auto dir = std::filesystem::temp_directory_path() / "fuelsim_vib_test";
  std::filesystem::create_directories(dir);
  const std::vector<std::int16_t> samples{0, 1, -1, 32767, -32768, 1234};
  write_vib(dir / "a.vib", samples);
  EXPECT_EQ(read_vib(dir / "a.vib"), samples);
  const auto raw = read_file(dir / "a.vib");
  EXPECT_EQ(raw.substr(0, 4), "VIB1");
  EXPECT_EQ(raw.size(), 8u + 2 * samples.size());
  EXPECT_EQ(static_cast<unsigned char>(raw[4]), 6);
  EXPECT_EQ(static_cast<unsigned char>(raw[8 + 6]), 0xFF);  // 32767 little-endian low byte
  {
    std::ofstream os(dir / "b.vib", std::ios::binary);
    os << "VIB2" << std::string(4, '\0');
  }
  EXPECT_THROW(read_vib(dir / "b.vib"), ParseError);
  {
    std::ofstream os(dir / "c.vib", std::ios::binary);
    os << "VIB1" << std::string(1, '\3') << std::string(3, '\0') << "ab";
  }
  EXPECT_THROW(read_vib(dir / "c.vib"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST(Sidecar, WriterEmitsOneFramePerDispenserPerDay) {
  const auto dir = std::filesystem::temp_directory_path() / "fuelsim_frames_test";
  std::filesystem::remove_all(dir);
  auto cfg = config::parse_config("{\"horizon_days\":2}");
  std::ostringstream os;
  app::simulate(cfg, config::PricingChoice::fixed_margin, os, dir, nullptr);
  const auto ev = parse_event_log(os.str());
  int refs = 0;
  for (const auto& r : ev.records) {
    if (r.stream != Stream::vibration_frame_ref) continue;
    ++refs;
    const auto samples = read_vib(dir / r.s("file"));
    EXPECT_EQ(static_cast<std::int64_t>(samples.size()), r.i("samples"));
  }
  EXPECT_EQ(refs, 2 * cfg.station.sensors.dispensers);
  std::filesystem::remove_all(dir);
}

TEST(Digest, HexRoundTrip) {
  EXPECT_EQ(digest_hex(0x00000000000000ffULL), "00000000000000ff");
  EXPECT_EQ(parse_digest_hex("a561d16f5220360a"), 0xa561d16f5220360aULL);
  EXPECT_FALSE(parse_digest_hex("A561D16F5220360A").has_value());
  EXPECT_FALSE(parse_digest_hex("abc").has_value());
}
