#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fusedim/error.hpp"

namespace fusedim {

// Wire format (bit-exact contract, 22 bytes per packet):
//   byte 0      0xFA start marker
//   byte 1      packet index in [0xA0, 0xF9]; covers angles 4*(index-0xA0)..+3
//   bytes 2-3   LE16 motor speed; rpm = speed / 64.0
//   bytes 4,8,12,16   four 4-byte readings:
//       b0        distance low byte
//       b1 bits 0-5  distance high bits (14-bit distance, mm)
//       b1 bit 6  strength warning
//       b1 bit 7  invalid flag (distance bits are zero when set)
//       b2-b3     LE16 strength
//   bytes 20-21 LE16 checksum over bytes 0-19 (see packet_checksum)
inline constexpr std::size_t kPacketSize = 22;
inline constexpr std::uint8_t kPacketStart = 0xFA;
inline constexpr std::uint8_t kPacketIndexBase = 0xA0;
inline constexpr int kPacketsPerSweep = 90;
inline constexpr int kSweepAngles = 360;
inline constexpr std::uint16_t kMaxDistanceMm = 0x3FFF;

struct LrfReading {
  std::uint16_t distance_mm = 0;  // meaningful only when !invalid
  std::uint16_t strength = 0;
  bool invalid = true;
  bool strength_warning = false;

  bool operator==(const LrfReading&) const = default;
};

struct LrfPacket {
  std::uint8_t index = kPacketIndexBase;
  double rpm = 0;
  std::array<LrfReading, 4> readings{};
  bool checksum_ok = false;

  int base_angle() const { return 4 * (index - kPacketIndexBase); }
  bool operator==(const LrfPacket&) const = default;
};

/// Checksum over bytes 0..19 read as ten LE16 words: fold c = (c << 1) + w,
/// then reduce c = ((c & 0x7FFF) + (c >> 15)) & 0x7FFF. Encode and decode
/// share this routine; the round-trip property is the normative test.
inline std::uint16_t packet_checksum(std::span<const std::uint8_t> payload) {
  std::uint32_t c = 0;
  for (std::size_t i = 0; i + 1 < 20; i += 2) {
    const std::uint32_t w = payload[i] | (static_cast<std::uint32_t>(payload[i + 1]) << 8);
    c = (c << 1) + w;
  }
  return static_cast<std::uint16_t>(((c & 0x7FFF) + (c >> 15)) & 0x7FFF);
}

/// Decodes one exact 22-byte block. A failed checksum does not reject the
/// packet; the fields are still decoded and checksum_ok is cleared.
inline LrfPacket decode_packet(std::span<const std::uint8_t> block) {
  if (block.size() != kPacketSize)
    throw BadLength("decode_packet: expected 22 bytes, got " + std::to_string(block.size()));
  if (block[0] != kPacketStart) throw BadStart("decode_packet: missing 0xFA start byte");
  if (block[1] < kPacketIndexBase || block[1] > 0xF9)
    throw BadIndex("decode_packet: index byte out of [0xA0, 0xF9]");

  LrfPacket p;
  p.index = block[1];
  p.rpm = (block[2] | (static_cast<unsigned>(block[3]) << 8)) / 64.0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t off = 4 + 4 * static_cast<std::size_t>(i);
    LrfReading& rd = p.readings[i];
    rd.invalid = (block[off + 1] & 0x80) != 0;
    rd.strength_warning = (block[off + 1] & 0x40) != 0;
    rd.distance_mm = rd.invalid ? 0
                                : static_cast<std::uint16_t>(
                                      block[off] | ((block[off + 1] & 0x3F) << 8));
    rd.strength =
        static_cast<std::uint16_t>(block[off + 2] | (static_cast<unsigned>(block[off + 3]) << 8));
  }
  const std::uint16_t stored =
      static_cast<std::uint16_t>(block[20] | (static_cast<unsigned>(block[21]) << 8));
  p.checksum_ok = stored == packet_checksum(block.first(20));
  return p;
}

inline std::array<std::uint8_t, kPacketSize> encode_packet(const LrfPacket& p) {
  if (p.index < kPacketIndexBase || p.index > 0xF9)
    throw BadIndex("encode_packet: index byte out of [0xA0, 0xF9]");
  std::array<std::uint8_t, kPacketSize> b{};
  b[0] = kPacketStart;
  b[1] = p.index;
  const auto speed = static_cast<std::uint16_t>(std::llround(p.rpm * 64.0));
  b[2] = speed & 0xFF;
  b[3] = speed >> 8;
  for (int i = 0; i < 4; ++i) {
    const std::size_t off = 4 + 4 * static_cast<std::size_t>(i);
    const LrfReading& rd = p.readings[i];
    const std::uint16_t dist = rd.invalid ? 0 : std::min(rd.distance_mm, kMaxDistanceMm);
    b[off] = dist & 0xFF;
    b[off + 1] = static_cast<std::uint8_t>(((dist >> 8) & 0x3F) | (rd.strength_warning ? 0x40 : 0) |
                                           (rd.invalid ? 0x80 : 0));
    b[off + 2] = rd.strength & 0xFF;
    b[off + 3] = rd.strength >> 8;
  }
  const std::uint16_t chk = packet_checksum(std::span<const std::uint8_t>(b.data(), 20));
  b[20] = chk & 0xFF;
  b[21] = chk >> 8;
  return b;
}

struct SplitResult {
  std::vector<LrfPacket> packets;
  std::size_t bytes_skipped = 0;
  std::size_t checksum_rejects = 0;
};

/// Stream splitter with resynchronization: a candidate position must carry
/// 0xFA, a legal index and a matching checksum to be consumed as a packet;
/// on any failure the scan advances one byte and hunts for the next 0xFA.
inline SplitResult split_packet_stream(std::span<const std::uint8_t> stream) {
  SplitResult res;
  std::size_t i = 0;
  while (i + kPacketSize <= stream.size()) {
    if (stream[i] != kPacketStart) {
      ++i;
      ++res.bytes_skipped;
      continue;
    }
    try {
      LrfPacket p = decode_packet(stream.subspan(i, kPacketSize));
      if (!p.checksum_ok) {
        ++res.checksum_rejects;
        ++i;
        ++res.bytes_skipped;
        continue;
      }
      res.packets.push_back(p);
      i += kPacketSize;
    } catch (const Error&) {
      ++i;
      ++res.bytes_skipped;
    }
  }
  res.bytes_skipped += stream.size() - i;
  return res;
}

inline constexpr std::int32_t kMissingRange = -1;

struct LrfSweep {
  std::array<std::int32_t, kSweepAngles> range_mm;  // kMissingRange marks holes
  std::array<std::uint16_t, kSweepAngles> strength;
  double rpm_mean = 0;
  int coverage = 0;    // non-missing angle count
  int duplicates = 0;  // packets whose index was already seen

  LrfSweep() {
    range_mm.fill(kMissingRange);
    strength.fill(0);
  }

  bool has(int angle) const { return range_mm[angle] != kMissingRange; }

  void recount() {
    coverage = 0;
    for (auto r : range_mm) coverage += (r != kMissingRange);
  }

  bool operator==(const LrfSweep&) const = default;
};

/// Places every checksum-ok, valid reading at its angle slot; later
/// duplicates overwrite earlier ones. Partial sweeps are legal.
inline LrfSweep assemble_sweep(std::span<const LrfPacket> packets) {
  LrfSweep sweep;
  std::array<bool, kPacketsPerSweep> seen{};
  double rpm_sum = 0;
  int rpm_n = 0;
  for (const LrfPacket& p : packets) {
    if (!p.checksum_ok) continue;
    const int slot_base = p.index - kPacketIndexBase;
    if (seen[slot_base]) ++sweep.duplicates;
    seen[slot_base] = true;
    rpm_sum += p.rpm;
    ++rpm_n;
    for (int i = 0; i < 4; ++i) {
      const LrfReading& rd = p.readings[i];
      if (rd.invalid) continue;
      const int angle = p.base_angle() + i;
      sweep.range_mm[angle] = rd.distance_mm;
      sweep.strength[angle] = rd.strength;
    }
  }
  sweep.rpm_mean = rpm_n ? rpm_sum / rpm_n : 0.0;
  sweep.recount();
  return sweep;
}

/// Splits a continuous packet stream into revolutions: a non-increasing
/// index starts a new sweep.
inline std::vector<LrfSweep> assemble_sweeps(std::span<const LrfPacket> packets) {
  std::vector<LrfSweep> sweeps;
  std::vector<LrfPacket> group;
  int prev_index = -1;
  auto flush = [&] {
    if (!group.empty()) sweeps.push_back(assemble_sweep(group));
    group.clear();
  };
  for (const LrfPacket& p : packets) {
    if (prev_index >= 0 && p.index <= prev_index) flush();
    group.push_back(p);
    prev_index = p.index;
  }
  flush();
  return sweeps;
}

/// Per-angle median across realizations; angles observed fewer than
/// min_realizations times stay missing. The (lower) median tolerates up to
/// floor((N-1)/2) arbitrary outliers.
inline LrfSweep aggregate_realizations(std::span<const LrfSweep> sweeps,
                                       int min_realizations = 3) {
  if (sweeps.empty()) throw NoSweeps("aggregate_realizations: no sweeps");
  LrfSweep out;
  double rpm_sum = 0;
  for (const auto& s : sweeps) rpm_sum += s.rpm_mean;
  out.rpm_mean = rpm_sum / static_cast<double>(sweeps.size());
  std::vector<std::int32_t> ranges;
  std::vector<std::uint16_t> strengths;
  for (int a = 0; a < kSweepAngles; ++a) {
    ranges.clear();
    strengths.clear();
    for (const auto& s : sweeps)
      if (s.has(a)) {
        ranges.push_back(s.range_mm[a]);
        strengths.push_back(s.strength[a]);
      }
    if (static_cast<int>(ranges.size()) < std::max(1, min_realizations)) continue;
    const std::size_t mid = (ranges.size() - 1) / 2;
    std::nth_element(ranges.begin(), ranges.begin() + mid, ranges.end());
    std::nth_element(strengths.begin(), strengths.begin() + mid, strengths.end());
    out.range_mm[a] = ranges[mid];
    out.strength[a] = strengths[mid];
  }
  out.recount();
  return out;
}

/// Readings beyond the reliable range, and zero (void) readings, become
/// missing. Idempotent.
inline LrfSweep range_gate(LrfSweep sweep, int max_mm = 3000) {
  for (int a = 0; a < kSweepAngles; ++a) {
    if (sweep.range_mm[a] == kMissingRange) continue;
    if (sweep.range_mm[a] <= 0 || sweep.range_mm[a] > max_mm) {
      sweep.range_mm[a] = kMissingRange;
      sweep.strength[a] = 0;
    }
  }
  sweep.recount();
  return sweep;
}

struct Point2 {
  double x = 0;
  double y = 0;
  bool operator==(const Point2&) const = default;
};

struct SensorPose {
  double x = 0;          // mm
  double y = 0;
  double theta_rad = 0;  // rotation of the sensor's 0-degree ray
};

/// Polar to Cartesian in the ground plane (mm), one point per present angle.
inline std::vector<Point2> to_points(const LrfSweep& sweep, const SensorPose& pose = {}) {
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(sweep.coverage));
  for (int a = 0; a < kSweepAngles; ++a) {
    if (!sweep.has(a)) continue;
    const double ang = a * std::numbers::pi / 180.0 + pose.theta_rad;
    const double r = sweep.range_mm[a];
    pts.push_back({pose.x + r * std::cos(ang), pose.y + r * std::sin(ang)});
  }
  return pts;
}

// ---------------------------------------------------------------------------
// CSV forms: sweeps as (angle_deg, distance_mm, strength, flags) with flags
// bit 0 = missing; points as (x_mm, y_mm).

inline void save_sweep_csv(const std::filesystem::path& path, const LrfSweep& sweep) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "# rpm_mean " << sweep.rpm_mean << "\n";
  out << "angle_deg,distance_mm,strength,flags\n";
  for (int a = 0; a < kSweepAngles; ++a) {
    const bool missing = !sweep.has(a);
    out << a << "," << (missing ? 0 : sweep.range_mm[a]) << "," << sweep.strength[a] << ","
        << (missing ? 1 : 0) << "\n";
  }
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline LrfSweep load_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  LrfSweep sweep;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# rpm_mean", 0) == 0) {
      sweep.rpm_mean = std::stod(line.substr(10));
      continue;
    }
    if (line.empty() || line[0] == '#' || line.rfind("angle", 0) == 0) continue;
    std::istringstream ls(line);
    int a, dist, strength, flags;
    char comma;
    if (!(ls >> a >> comma >> dist >> comma >> strength >> comma >> flags))
      throw IoFailure(path.string() + ": malformed sweep row '" + line + "'");
    if (a < 0 || a >= kSweepAngles) throw IoFailure(path.string() + ": angle out of range");
    if (!(flags & 1)) {
      sweep.range_mm[a] = dist;
      sweep.strength[a] = static_cast<std::uint16_t>(strength);
    }
  }
  sweep.recount();
  return sweep;
}

inline void save_points_csv(const std::filesystem::path& path, std::span<const Point2> pts) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "x_mm,y_mm\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& p : pts) out << p.x << "," << p.y << "\n";
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline std::vector<Point2> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<Point2> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("x_mm", 0) == 0) continue;
    std::istringstream ls(line);
    double x, y;
    char comma;
    if (!(ls >> x >> comma >> y)) throw IoFailure(path.string() + ": malformed point row");
    pts.push_back({x, y});
  }
  return pts;
}

}  // namespace fusedim
