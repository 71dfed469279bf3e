#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fusedim/lrf.hpp"
#include "fusedim/scene.hpp"

using namespace fusedim;

namespace {

LrfPacket random_packet(std::mt19937& rng) {
  LrfPacket p;
  p.index = static_cast<std::uint8_t>(kPacketIndexBase + rng() % 90);
  p.rpm = static_cast<double>(rng() % 65536) / 64.0;  // exactly representable
  for (auto& rd : p.readings) {
    rd.invalid = rng() % 4 == 0;
    rd.strength_warning = rng() % 4 == 0;
    rd.strength = static_cast<std::uint16_t>(rng() % 65536);
    rd.distance_mm = rd.invalid ? 0 : static_cast<std::uint16_t>(rng() % (kMaxDistanceMm + 1));
  }
  p.checksum_ok = true;  // the encoder always writes a valid checksum
  return p;
}

LrfSweep constant_sweep(std::int32_t range, double rpm = 300) {
  LrfSweep s;
  for (auto& r : s.range_mm) r = range;
  for (auto& v : s.strength) v = 100;
  s.rpm_mean = rpm;
  s.recount();
  return s;
}

}  // namespace

TEST_CASE("encoder fixture decodes bit-exactly", "[lrf]") {
  LrfSweep sweep;
  for (int a = 0; a < 4; ++a) {
    sweep.range_mm[a] = 700 + a;  // angles 0..3 at 700, 701, 702, 703
    sweep.strength[a] = 1000 + a;
  }
  sweep.recount();
  const std::vector<std::uint8_t> stream = encode_packets(sweep, 305.5);
  REQUIRE(stream.size() == kPacketsPerSweep * kPacketSize);

  const LrfPacket first = decode_packet(std::span(stream).first(kPacketSize));
  CHECK(first.index == kPacketIndexBase);
  CHECK(first.checksum_ok);
  CHECK(first.rpm == Catch::Approx(305.5).margin(1.0 / 64.0));
  for (int i = 0; i < 4; ++i) {
    CHECK_FALSE(first.readings[i].invalid);
    CHECK(first.readings[i].distance_mm == 700 + i);
    CHECK(first.readings[i].strength == 1000 + i);
  }
  // every other packet carries only invalid readings
  const LrfPacket second = decode_packet(std::span(stream).subspan(kPacketSize, kPacketSize));
  for (const auto& rd : second.readings) CHECK(rd.invalid);
}

TEST_CASE("invalid flag suppresses the distance", "[lrf]") {
  LrfPacket p;
  p.index = 0xA5;
  p.rpm = 300;
  p.readings[2].invalid = false;
  p.readings[2].distance_mm = 1234;
  auto bytes = encode_packet(p);
  bytes[4 + 4 * 2 + 1] |= 0x80;  // force the invalid flag on reading 2
  // fix the checksum for the mutated payload
  const std::uint16_t chk = packet_checksum(std::span<const std::uint8_t>(bytes.data(), 20));
  bytes[20] = chk & 0xFF;
  bytes[21] = chk >> 8;
  const LrfPacket q = decode_packet(bytes);
  CHECK(q.readings[2].invalid);
  CHECK(q.readings[2].distance_mm == 0);
}

TEST_CASE("corrupted checksum flags but keeps the packet", "[lrf]") {
  LrfPacket p;
  p.index = 0xB0;
  p.rpm = 280;
  p.readings[0] = {850, 77, false, false};
  auto bytes = encode_packet(p);
  bytes[20] ^= 0xFF;
  const LrfPacket q = decode_packet(bytes);
  CHECK_FALSE(q.checksum_ok);
  CHECK(q.index == 0xB0);
  CHECK(q.readings[0].distance_mm == 850);
}

TEST_CASE("decode rejects malformed blocks", "[lrf]") {
  std::array<std::uint8_t, kPacketSize> ok = encode_packet(LrfPacket{});
  CHECK_THROWS_AS(decode_packet(std::span(ok).first(10)), BadLength);
  auto bad_start = ok;
  bad_start[0] = 0x00;
  CHECK_THROWS_AS(decode_packet(bad_start), BadStart);
  auto bad_index = ok;
  bad_index[1] = 0x10;
  CHECK_THROWS_AS(decode_packet(bad_index), BadIndex);
}

TEST_CASE("decode of encode is the identity on randomized packets", "[lrf]") {
  std::mt19937 rng(61);
  for (int i = 0; i < 10000; ++i) {
    const LrfPacket p = random_packet(rng);
    const LrfPacket q = decode_packet(encode_packet(p));
    CHECK(q == p);
  }
}

TEST_CASE("stream splitter resynchronizes after a deleted byte", "[lrf][resync]") {
  std::vector<LrfSweep> sweeps{constant_sweep(700)};
  std::vector<std::uint8_t> stream = encode_packets(sweeps[0], 300);
  REQUIRE(split_packet_stream(stream).packets.size() == 90);

  // delete one byte inside packet 12
  stream.erase(stream.begin() + 12 * kPacketSize + 7);
  const SplitResult res = split_packet_stream(stream);
  CHECK(res.packets.size() >= 89);
  CHECK(res.checksum_rejects >= 1);
}

TEST_CASE("all-zero streams decode to nothing", "[lrf]") {
  const std::vector<std::uint8_t> zeros(2200, 0);
  const SplitResult res = split_packet_stream(zeros);
  CHECK(res.packets.empty());
}

TEST_CASE("sweep assembly places readings and reports coverage", "[lrf]") {
  SECTION("full sweep") {
    const auto stream = encode_packets(constant_sweep(900));
    const auto packets = split_packet_stream(stream).packets;
    const LrfSweep sweep = assemble_sweep(packets);
    CHECK(sweep.coverage == 360);
    for (int a = 0; a < 360; ++a) CHECK(sweep.range_mm[a] == 900);
    CHECK(sweep.rpm_mean == Catch::Approx(300));
  }
  SECTION("five packets cover twenty angles") {
    std::vector<LrfPacket> packets;
    for (int k = 0; k < 5; ++k) {
      LrfPacket p;
      p.index = static_cast<std::uint8_t>(kPacketIndexBase + k);
      p.rpm = 300;
      p.checksum_ok = true;
      for (auto& rd : p.readings) rd = {500, 10, false, false};
      packets.push_back(p);
    }
    const LrfSweep sweep = assemble_sweep(packets);
    CHECK(sweep.coverage == 20);
    CHECK(sweep.has(19));
    CHECK_FALSE(sweep.has(20));
  }
  SECTION("duplicate index: last wins, counted once") {
    std::vector<LrfPacket> packets;
    for (int dist : {600, 777}) {
      LrfPacket p;
      p.index = kPacketIndexBase;
      p.rpm = 300;
      p.checksum_ok = true;
      p.readings[0] = {static_cast<std::uint16_t>(dist), 5, false, false};
      packets.push_back(p);
    }
    const LrfSweep sweep = assemble_sweep(packets);
    CHECK(sweep.range_mm[0] == 777);
    CHECK(sweep.duplicates == 1);
  }
  SECTION("checksum-failed packets are not placed") {
    LrfPacket p;
    p.index = kPacketIndexBase;
    p.checksum_ok = false;
    p.readings[0] = {500, 5, false, false};
    const LrfSweep sweep = assemble_sweep(std::array{p});
    CHECK(sweep.coverage == 0);
  }
}

TEST_CASE("packet streams split into revolutions at index wrap", "[lrf]") {
  std::vector<LrfSweep> five(5, constant_sweep(800));
  const auto stream = encode_packet_stream(five);
  const auto packets = split_packet_stream(stream).packets;
  REQUIRE(packets.size() == 450);
  const auto sweeps = assemble_sweeps(packets);
  REQUIRE(sweeps.size() == 5);
  for (const auto& s : sweeps) CHECK(s.coverage == 360);
}

TEST_CASE("median aggregation rejects outliers", "[lrf]") {
  SECTION("five identical sweeps pass through") {
    const std::vector<LrfSweep> sweeps(5, constant_sweep(700));
    const LrfSweep agg = aggregate_realizations(sweeps);
    for (int a = 0; a < 360; ++a) CHECK(agg.range_mm[a] == 700);
    CHECK(agg.rpm_mean == Catch::Approx(300));
  }
  SECTION("one 2500 mm outlier against four 700 mm readings") {
    std::vector<LrfSweep> sweeps(5, constant_sweep(700));
    sweeps[2].range_mm[90] = 2500;
    const LrfSweep agg = aggregate_realizations(sweeps);
    CHECK(agg.range_mm[90] == 700);
  }
  SECTION("tolerates floor((N-1)/2) arbitrary outliers") {
    std::mt19937 rng(62);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<LrfSweep> sweeps(5, constant_sweep(700));
      // two arbitrary corruptions at the same angle
      const int a = static_cast<int>(rng() % 360);
      sweeps[rng() % 5].range_mm[a] = static_cast<std::int32_t>(rng() % 3000) + 1;
      int other = static_cast<int>(rng() % 5);
      sweeps[other].range_mm[a] = static_cast<std::int32_t>(rng() % 3000) + 1;
      // note: if both corruptions hit the same sweep only one outlier exists
      const LrfSweep agg = aggregate_realizations(sweeps);
      CHECK(agg.range_mm[a] == 700);
    }
  }
  SECTION("angles below min_realizations stay missing") {
    std::vector<LrfSweep> sweeps(5, constant_sweep(700));
    for (int k : {0, 1, 2}) sweeps[k].range_mm[45] = kMissingRange;
    const LrfSweep agg = aggregate_realizations(sweeps, 3);  // only 2 readings remain
    CHECK_FALSE(agg.has(45));
  }
  SECTION("no sweeps is an error") {
    CHECK_THROWS_AS(aggregate_realizations({}), NoSweeps);
  }
}

TEST_CASE("aggregation is permutation-invariant and idempotent", "[lrf]") {
  std::mt19937 rng(63);
  std::vector<LrfSweep> sweeps;
  for (int k = 0; k < 5; ++k) {
    LrfSweep s = constant_sweep(500);
    for (int a = 0; a < 360; ++a)
      s.range_mm[a] = (rng() % 6 == 0) ? kMissingRange
                                       : static_cast<std::int32_t>(500 + rng() % 50);
    s.recount();
    sweeps.push_back(s);
  }
  const LrfSweep a = aggregate_realizations(sweeps);
  std::shuffle(sweeps.begin(), sweeps.end(), rng);
  const LrfSweep b = aggregate_realizations(sweeps);
  CHECK(a.range_mm == b.range_mm);

  const std::vector<LrfSweep> same(5, a);
  const LrfSweep c = aggregate_realizations(same);
  CHECK(c.range_mm == a.range_mm);
}

TEST_CASE("range gate bounds", "[lrf]") {
  LrfSweep s;
  s.range_mm[0] = 2999;
  s.range_mm[1] = 3000;
  s.range_mm[2] = 3001;
  s.range_mm[3] = 0;
  s.range_mm[4] = 12000;
  s.recount();
  const LrfSweep gated = range_gate(s, 3000);
  CHECK(gated.range_mm[0] == 2999);
  CHECK(gated.range_mm[1] == 3000);
  CHECK_FALSE(gated.has(2));
  CHECK_FALSE(gated.has(3));
  CHECK_FALSE(gated.has(4));
  CHECK(range_gate(gated, 3000) == gated);  // idempotent
}

TEST_CASE("polar to cartesian", "[lrf]") {
  LrfSweep s;
  s.range_mm[0] = 1000;
  s.range_mm[90] = 1000;
  s.recount();
  const auto pts = to_points(s);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].x == Catch::Approx(1000).margin(1e-9));
  CHECK(pts[0].y == Catch::Approx(0).margin(1e-9));
  CHECK(pts[1].x == Catch::Approx(0).margin(1e-9));
  CHECK(pts[1].y == Catch::Approx(1000).margin(1e-9));
}

TEST_CASE("to_points preserves range", "[lrf]") {
  std::mt19937 rng(64);
  LrfSweep s;
  for (int a = 0; a < 360; ++a) s.range_mm[a] = static_cast<std::int32_t>(100 + rng() % 2900);
  s.recount();
  const SensorPose pose{123.0, -456.0, 0.7};
  const auto pts = to_points(s, pose);
  REQUIRE(pts.size() == 360);
  for (int a = 0; a < 360; ++a) {
    const double dx = pts[a].x - pose.x, dy = pts[a].y - pose.y;
    CHECK(std::hypot(dx, dy) == Catch::Approx(s.range_mm[a]).epsilon(1e-9));
  }
}

TEST_CASE("sweep and point CSV round trips", "[lrf][io]") {
  std::mt19937 rng(65);
  LrfSweep s;
  for (int a = 0; a < 360; ++a)
    if (rng() % 5) {
      s.range_mm[a] = static_cast<std::int32_t>(rng() % 3000) + 1;
      s.strength[a] = static_cast<std::uint16_t>(rng() % 1000);
    }
  s.rpm_mean = 287.25;
  s.recount();
  const auto dir = std::filesystem::temp_directory_path();
  save_sweep_csv(dir / "fusedim_sweep.csv", s);
  LrfSweep loaded = load_sweep_csv(dir / "fusedim_sweep.csv");
  // strengths of missing angles are not stored
  for (int a = 0; a < 360; ++a) {
    CHECK(loaded.range_mm[a] == s.range_mm[a]);
    if (s.has(a)) CHECK(loaded.strength[a] == s.strength[a]);
  }
  CHECK(loaded.rpm_mean == Catch::Approx(287.25));

  const std::vector<Point2> pts{{1.5, -2.25}, {3000.125, 0.0}};
  save_points_csv(dir / "fusedim_points.csv", pts);
  const auto loaded_pts = load_points_csv(dir / "fusedim_points.csv");
  REQUIRE(loaded_pts.size() == 2);
  CHECK(loaded_pts[0].x == Catch::Approx(1.5));
  CHECK(loaded_pts[1].x == Catch::Approx(3000.125));
}
