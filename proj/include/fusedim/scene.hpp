#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "fusedim/calibration.hpp"
#include "fusedim/detail.hpp"
#include "fusedim/error.hpp"
#include "fusedim/image.hpp"
#include "fusedim/keyvalue.hpp"
#include "fusedim/lrf.hpp"
#include "fusedim/sgm.hpp"

namespace fusedim {

struct Cuboid {
  Eigen::Vector3d center;  // mm, world frame (x forward, y left, z up)
  Eigen::Vector3d size;
  std::uint64_t texture_seed = 1;
  double texture_cell_mm = 48;
};

struct GlareSpot {
  bool enabled = false;
  double u = 0, v = 0;  // image-space centre, same in both views
  double radius = 40;
  double gain = 1.0;
};

struct Room {
  bool enabled = false;
  double center_x = 0, center_y = 0;  // mm
  double width_mm = 6000;             // extent along x
  double depth_mm = 6000;             // extent along y
  double wall_height_mm = 500;
  std::uint64_t texture_seed = 23;
};

/// Ground-truth scene: axis-aligned textured cuboids on a textured ground
/// plane, a side-by-side rectified camera rig at a given height looking
/// along +x, and an LRF scanning a horizontal plane.
struct SceneSpec {
  std::vector<Cuboid> objects;
  std::uint64_t seed = 1;
  std::uint64_t ground_seed = 7;
  bool ground_enabled = true;
  StereoRig rig;
  double camera_height_mm = 85;
  double camera_distance_mm = 700;  // to the nearest object face (context only)
  SensorPose lrf_pose{};
  double lrf_height_mm = 100;
  double ambient = 0.35;
  GlareSpot glare{};
  bool unicolor = false;  // reproduces the matte-texture failure case
  Room room{};

  // Desk-scale reference scene: 300 mm cube with its near face 700 mm from
  // a rig with 93.1 mm baseline, f = 730 px, camera 85 mm above ground. The
  // principal point is shifted down (lens-shift framing) so the object base
  // sits just below the frame, matching the reference capture geometry. The
  // scene is indoors: a 6.4 m room whose walls lie beyond the LRF range gate
  // but give the matcher a textured background instead of a void.
  static SceneSpec paper_default() {
    SceneSpec s;
    s.objects.push_back({{850, 0, 150}, {300, 300, 300}, 11});
    s.rig.left.intr = {730, 730, 319.5, kDefaultSceneCy};
    s.rig.right.intr = s.rig.left.intr;
    s.rig.R = Eigen::Matrix3d::Identity();
    s.rig.t << -93.1, 0, 0;
    s.room.enabled = true;
    s.room.width_mm = 6400;
    s.room.depth_mm = 6400;
    s.room.wall_height_mm = 2200;
    return s;
  }

  static constexpr double kDefaultSceneCy = 396.5;

  // Slanted or distant surfaces (ground, room walls) carry coarser texture
  // cells so that a matching block sees a coherent pattern despite the
  // in-block disparity gradient; near object faces keep fine texture.
  static constexpr double kFarSurfaceCellMm = 140;

  std::vector<Cuboid> solid_geometry() const {
    std::vector<Cuboid> solids = objects;
    if (room.enabled) {
      const double t = 10;  // wall thickness; inner faces sit exactly at +-w/2, +-d/2
      const double hz = wall_z();
      const double w = room.width_mm, d = room.depth_mm;
      const double cell = kFarSurfaceCellMm;  // far surfaces carry coarser texture
      solids.push_back({{room.center_x - (w + t) / 2, room.center_y, hz}, {t, d + 2 * t, 2 * hz},
                        room.texture_seed, cell});
      solids.push_back({{room.center_x + (w + t) / 2, room.center_y, hz}, {t, d + 2 * t, 2 * hz},
                        room.texture_seed + 1, cell});
      solids.push_back({{room.center_x, room.center_y - (d + t) / 2, hz}, {w + 2 * t, t, 2 * hz},
                        room.texture_seed + 2, cell});
      solids.push_back({{room.center_x, room.center_y + (d + t) / 2, hz}, {w + 2 * t, t, 2 * hz},
                        room.texture_seed + 3, cell});
    }
    return solids;
  }

  static SceneSpec from_config(const KeyValueFile& kv) {
    SceneSpec s = paper_default();
    s.seed = static_cast<std::uint64_t>(kv.number("scene", "seed", double(s.seed)));
    s.ground_seed =
        static_cast<std::uint64_t>(kv.number("scene", "ground_seed", double(s.ground_seed)));
    s.ground_enabled = kv.flag("scene", "ground", s.ground_enabled);
    s.ambient = kv.number("scene", "ambient", s.ambient);
    s.unicolor = kv.flag("scene", "unicolor", s.unicolor);

    s.camera_height_mm = kv.number("camera", "height_mm", s.camera_height_mm);
    s.camera_distance_mm = kv.number("camera", "distance_mm", s.camera_distance_mm);
    const double f = kv.number("camera", "f", s.rig.left.intr.fx);
    s.rig.left.intr.fx = s.rig.left.intr.fy = f;
    s.rig.left.intr.cx = kv.number("camera", "cx", s.rig.left.intr.cx);
    s.rig.left.intr.cy = kv.number("camera", "cy", s.rig.left.intr.cy);
    s.rig.right.intr = s.rig.left.intr;
    const double baseline = kv.number("camera", "baseline_mm", s.rig.baseline());
    s.rig.t << -baseline, 0, 0;

    if (kv.has_section("objects")) {
      s.objects.clear();
      for (const auto* e : kv.find_all("objects", "cuboid")) {
        if (e->values.size() != 6 && e->values.size() != 7)
          throw ConfigError(kv.origin() + ": cuboid needs 6 or 7 values "
                            "(center xyz, size xyz [, texture seed])");
        std::array<double, 7> v{};
        for (std::size_t i = 0; i < e->values.size(); ++i) v[i] = std::stod(e->values[i]);
        Cuboid c;
        c.center = {v[0], v[1], v[2]};
        c.size = {v[3], v[4], v[5]};
        c.texture_seed = e->values.size() == 7 ? static_cast<std::uint64_t>(v[6]) : 11;
        s.objects.push_back(c);
      }
    }

    s.lrf_pose.x = kv.number("lrf", "x", s.lrf_pose.x);
    s.lrf_pose.y = kv.number("lrf", "y", s.lrf_pose.y);
    s.lrf_pose.theta_rad =
        kv.number("lrf", "theta_deg", 0.0) * std::numbers::pi / 180.0;
    s.lrf_height_mm = kv.number("lrf", "height_mm", s.lrf_height_mm);

    if (kv.has_section("glare")) {
      s.glare.enabled = true;
      s.glare.u = kv.require_number("glare", "u");
      s.glare.v = kv.require_number("glare", "v");
      s.glare.radius = kv.number("glare", "radius", s.glare.radius);
      s.glare.gain = kv.number("glare", "gain", s.glare.gain);
    }
    if (kv.has_section("room")) {
      s.room.enabled = true;
      s.room.center_x = kv.number("room", "center_x", 0);
      s.room.center_y = kv.number("room", "center_y", 0);
      s.room.width_mm = kv.number("room", "width_mm", s.room.width_mm);
      s.room.depth_mm = kv.number("room", "depth_mm", s.room.depth_mm);
      s.room.wall_height_mm = kv.number("room", "height_mm", s.room.wall_height_mm);
    }
    return s;
  }

 private:
  double wall_z() const { return room.wall_height_mm / 2; }
};

namespace detail {

inline double value_noise3(double x, double y, double z, std::uint64_t seed) {
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const auto iz = static_cast<std::int64_t>(fz);
  auto corner = [&](std::int64_t cx, std::int64_t cy, std::int64_t cz) {
    std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(cx));
    h = hash_combine(h, static_cast<std::uint64_t>(cy));
    h = hash_combine(h, static_cast<std::uint64_t>(cz));
    return hash_unit(h);
  };
  auto fade = [](double t) { return t * t * (3 - 2 * t); };
  const double u = fade(x - fx), v = fade(y - fy), w = fade(z - fz);
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double c00 = lerp(corner(ix, iy, iz), corner(ix + 1, iy, iz), u);
  const double c10 = lerp(corner(ix, iy + 1, iz), corner(ix + 1, iy + 1, iz), u);
  const double c01 = lerp(corner(ix, iy, iz + 1), corner(ix + 1, iy, iz + 1), u);
  const double c11 = lerp(corner(ix, iy + 1, iz + 1), corner(ix + 1, iy + 1, iz + 1), u);
  return lerp(lerp(c00, c10, v), lerp(c01, c11, v), w);
}

// octave-summed value noise in [0, 1]; the base cell size controls the
// finest matchable detail of the surface
inline double surface_texture(const Eigen::Vector3d& p, std::uint64_t seed, double base_cell) {
  double sum = 0, amp = 1, total = 0;
  double cell = base_cell;  // mm
  for (int o = 0; o < 3; ++o) {
    sum += amp * value_noise3(p.x() / cell, p.y() / cell, p.z() / cell, seed + o * 1315423911ull);
    total += amp;
    amp *= 0.55;
    cell *= 0.5;
  }
  return sum / total;
}

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  std::uint64_t seed = 0;
  double texture_cell = 48;
  bool hit = false;
};

inline void intersect_cuboid(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                             const Cuboid& c, RayHit& best) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  double near_sign = 0;
  for (int a = 0; a < 3; ++a) {
    const double lo = c.center[a] - c.size[a] / 2;
    const double hi = c.center[a] + c.size[a] / 2;
    if (std::abs(dir[a]) < 1e-12) {
      if (origin[a] < lo || origin[a] > hi) return;
      continue;
    }
    double t0 = (lo - origin[a]) / dir[a];
    double t1 = (hi - origin[a]) / dir[a];
    double sign = -1;
    if (t0 > t1) {
      std::swap(t0, t1);
      sign = 1;
    }
    if (t0 > t_near) {
      t_near = t0;
      near_axis = a;
      near_sign = sign;
    }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return;
  }
  if (near_axis < 0 || t_near <= 1e-9 || t_near >= best.t) return;
  best.t = t_near;
  best.point = origin + t_near * dir;
  best.normal = Eigen::Vector3d::Zero();
  best.normal[near_axis] = near_sign;
  best.seed = c.texture_seed;
  best.texture_cell = c.texture_cell_mm;
  best.hit = true;
}

inline RayHit cast_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                       const std::vector<Cuboid>& solids, const SceneSpec& scene) {
  RayHit best;
  for (const auto& c : solids) intersect_cuboid(origin, dir, c, best);
  if (scene.ground_enabled && dir.z() < -1e-12) {
    const double t = -origin.z() / dir.z();
    if (t > 1e-9 && t < best.t) {
      best.t = t;
      best.point = origin + t * dir;
      best.normal = Eigen::Vector3d::UnitZ();
      best.seed = scene.ground_seed;
      best.texture_cell = SceneSpec::kFarSurfaceCellMm;
      best.hit = true;
    }
  }
  return best;
}

inline std::uint8_t shade(const RayHit& hit, const SceneSpec& scene) {
  static const Eigen::Vector3d kLight = Eigen::Vector3d(-0.55, 0.25, 0.80).normalized();
  const double tex =
      scene.unicolor ? 0.5 : surface_texture(hit.point, hit.seed, hit.texture_cell);
  const double diffuse = std::max(0.0, hit.normal.dot(kLight));
  const double v =
      255.0 * (scene.ambient + (1.0 - scene.ambient) * diffuse) * (0.30 + 0.70 * tex);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

}  // namespace detail

struct RenderResult {
  Image8 left, right;
  DisparityMap gt_disparity;    // fixed-point, quantized to 1/16 px
  std::vector<double> gt_depth; // exact per-pixel optical-axis depth, mm; inf = sky
};

/// Per-pixel raycast through the rectified pinhole model. Surface intensity
/// is a pure function of the world point, so both views sample identical
/// texture. Requires an effectively rectified rig (R = I, t along -x, no
/// distortion, matching intrinsics).
inline RenderResult render_stereo(const SceneSpec& scene, int rows, int cols) {
  const StereoRig& rig = scene.rig;
  const auto& kl = rig.left.intr;
  const auto& kr = rig.right.intr;
  if ((rig.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(rig.t.y()) > 1e-9 || std::abs(rig.t.z()) > 1e-9 || !rig.left.dist.is_zero() ||
      !rig.right.dist.is_zero() || kl.fx != kr.fx || kl.fy != kr.fy || kl.cx != kr.cx ||
      kl.cy != kr.cy)
    throw Error("render_stereo: scene rig must be rectified (R = I, t = (-T, 0, 0), "
                "no distortion, matching intrinsics)");
  const double baseline = rig.baseline();
  if (!(baseline > 0)) throw DegenerateBaseline("render_stereo: zero baseline");

  const Eigen::Vector3d cam_x(0, -1, 0);  // image right
  const Eigen::Vector3d cam_y(0, 0, -1);  // image down
  const Eigen::Vector3d cam_z(1, 0, 0);   // optical axis
  const Eigen::Vector3d left_center(0, 0, scene.camera_height_mm);
  const Eigen::Vector3d right_center = left_center + baseline * cam_x;
  const std::vector<Cuboid> solids = scene.solid_geometry();

  RenderResult out;
  out.left = Image8(rows, cols, 0);
  out.right = Image8(rows, cols, 0);
  out.gt_depth.assign(static_cast<std::size_t>(rows) * cols,
                      std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> gt_fp(out.gt_depth.size(), -1);

  detail::parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
    for (int c = 0; c < cols; ++c) {
      const double dx = (c - kl.cx) / kl.fx;
      const double dy = (static_cast<double>(r) - kl.cy) / kl.fy;
      const Eigen::Vector3d dir = cam_z + dx * cam_x + dy * cam_y;  // unit optical depth
      const std::size_t i = r * cols + c;

      const detail::RayHit lh = detail::cast_ray(left_center, dir, solids, scene);
      if (lh.hit) {
        out.left.at(static_cast<int>(r), c) = detail::shade(lh, scene);
        out.gt_depth[i] = lh.t;
        gt_fp[i] = std::llround(kl.fx * baseline / lh.t * kDisparityScale);
      }
      const detail::RayHit rh = detail::cast_ray(right_center, dir, solids, scene);
      if (rh.hit) out.right.at(static_cast<int>(r), c) = detail::shade(rh, scene);
    }
  });

  if (scene.glare.enabled) {
    const auto& g = scene.glare;
    for (auto* img : {&out.left, &out.right})
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double d2 = (c - g.u) * (c - g.u) + (r - g.v) * (r - g.v);
          const double add = g.gain * 255.0 * std::exp(-d2 / (2 * g.radius * g.radius));
          img->at(r, c) = static_cast<std::uint8_t>(
              std::min(255.0, img->at(r, c) + add));
        }
  }

  std::int64_t max_fp = 0;
  for (auto v : gt_fp) max_fp = std::max(max_fp, v);
  const int needed_px = static_cast<int>(max_fp / kDisparityScale) + 1;
  const int num_d = std::max(16, (needed_px + 15) / 16 * 16);
  out.gt_disparity = DisparityMap(rows, cols, 0, num_d);
  for (std::size_t i = 0; i < gt_fp.size(); ++i)
    if (gt_fp[i] >= 0) out.gt_disparity.fp[i] = static_cast<std::int32_t>(gt_fp[i]);
  return out;
}

struct LrfNoise {
  double stddev_mm = 3.0;
  double outlier_prob = 0.0;
  double outlier_range_mm = 3000.0;
};

/// One horizontal 360-degree raycast per realization, independently noised
/// from the scene seed. Per-(realization, angle) generators keep the output
/// deterministic and order-independent.
inline std::vector<LrfSweep> raycast_sweep(const SceneSpec& scene, const LrfNoise& noise,
                                           int realizations) {
  if (realizations < 1) throw Error("raycast_sweep: need at least one realization");
  const std::vector<Cuboid> solids = scene.solid_geometry();
  const Eigen::Vector3d origin(scene.lrf_pose.x, scene.lrf_pose.y, scene.lrf_height_mm);

  std::vector<LrfSweep> sweeps(static_cast<std::size_t>(realizations));
  for (int k = 0; k < realizations; ++k) {
    LrfSweep& sweep = sweeps[static_cast<std::size_t>(k)];
    sweep.rpm_mean = 300;
    for (int a = 0; a < kSweepAngles; ++a) {
      const double ang = a * std::numbers::pi / 180.0 + scene.lrf_pose.theta_rad;
      const Eigen::Vector3d dir(std::cos(ang), std::sin(ang), 0);
      detail::RayHit best;
      for (const auto& c : solids) detail::intersect_cuboid(origin, dir, c, best);
      if (!best.hit) continue;

      double d = best.t;
      std::mt19937_64 rng(detail::hash_combine(
          detail::hash_combine(scene.seed, 0x5256Full + static_cast<std::uint64_t>(k)),
          static_cast<std::uint64_t>(a)));
      if (noise.outlier_prob > 0 &&
          std::uniform_real_distribution<double>(0, 1)(rng) < noise.outlier_prob) {
        d = std::uniform_real_distribution<double>(1.0, noise.outlier_range_mm)(rng);
      } else if (noise.stddev_mm > 0) {
        d += std::normal_distribution<double>(0, noise.stddev_mm)(rng);
      }
      const auto mm = static_cast<std::int32_t>(
          std::clamp<long long>(std::llround(d), 1, kMaxDistanceMm));
      sweep.range_mm[a] = mm;
      sweep.strength[a] = static_cast<std::uint16_t>(
          std::clamp(2000000.0 / std::max(100.0, double(mm)), 1.0, 65535.0));
    }
    sweep.recount();
  }
  return sweeps;
}

/// 90 packets x 22 bytes covering all 360 angles; missing readings carry the
/// invalid flag.
inline std::vector<std::uint8_t> encode_packets(const LrfSweep& sweep, double rpm = 300) {
  std::vector<std::uint8_t> stream;
  stream.reserve(kPacketsPerSweep * kPacketSize);
  for (int k = 0; k < kPacketsPerSweep; ++k) {
    LrfPacket p;
    p.index = static_cast<std::uint8_t>(kPacketIndexBase + k);
    p.rpm = rpm;
    for (int i = 0; i < 4; ++i) {
      const int angle = 4 * k + i;
      LrfReading& rd = p.readings[i];
      if (sweep.has(angle)) {
        rd.invalid = false;
        rd.distance_mm =
            static_cast<std::uint16_t>(std::min<std::int32_t>(sweep.range_mm[angle],
                                                              kMaxDistanceMm));
        rd.strength = sweep.strength[angle];
      }
    }
    const auto bytes = encode_packet(p);
    stream.insert(stream.end(), bytes.begin(), bytes.end());
  }
  return stream;
}

inline std::vector<std::uint8_t> encode_packet_stream(std::span<const LrfSweep> sweeps,
                                                      double rpm = 300) {
  std::vector<std::uint8_t> stream;
  stream.reserve(sweeps.size() * kPacketsPerSweep * kPacketSize);
  for (const auto& s : sweeps) {
    const auto one = encode_packets(s, rpm);
    stream.insert(stream.end(), one.begin(), one.end());
  }
  return stream;
}

}  // namespace fusedim
