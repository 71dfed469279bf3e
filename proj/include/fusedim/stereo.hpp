#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "fusedim/camera.hpp"
#include "fusedim/detail.hpp"
#include "fusedim/error.hpp"
#include "fusedim/image.hpp"

namespace fusedim {

struct StereoCamera {
  CameraIntrinsics intr;
  DistortionCoefficients dist;
};

/// Calibrated pair. R and t map left-camera coordinates into the right
/// camera's frame: X_right = R * X_left + t (t in millimetres). With the
/// usual side-by-side rig t is (-T, 0, 0), so disparity d = x_l - x_r >= 0.
struct StereoRig {
  StereoCamera left, right;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  double baseline() const { return t.norm(); }

  void validate() const {
    left.intr.validate();
    right.intr.validate();
    const Eigen::Matrix3d err = R.transpose() * R - Eigen::Matrix3d::Identity();
    if (err.cwiseAbs().maxCoeff() > 1e-3)
      throw Error("stereo rig: R is not orthonormal within 1e-3");
    if (R.determinant() <= 0) throw Error("stereo rig: det(R) must be positive");
    if (!(t.norm() > 0)) throw DegenerateBaseline("stereo rig: zero baseline");
  }
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

/// E = R^T [t]x. For corresponding normalized points this gives
/// x_left^T E x_right = 0 under the rig convention above.
inline Eigen::Matrix3d essential_from_rt(const StereoRig& rig) {
  if (!(rig.t.norm() > 0)) throw DegenerateBaseline("essential_from_rt: zero baseline");
  return rig.R.transpose() * skew(rig.t);
}

/// F = K_right^{-T} E K_left^{-1}, left unnormalized.
inline Eigen::Matrix3d fundamental_from_essential(const Eigen::Matrix3d& E,
                                                  const CameraIntrinsics& k_left,
                                                  const CameraIntrinsics& k_right) {
  return k_right.inverse_matrix().transpose() * E * k_left.inverse_matrix();
}

struct EpipolarMatrices {
  Eigen::Matrix3d E;
  Eigen::Matrix3d F;
};

inline EpipolarMatrices epipolar_matrices(const StereoRig& rig) {
  EpipolarMatrices m;
  m.E = essential_from_rt(rig);
  m.F = fundamental_from_essential(m.E, rig.left.intr, rig.right.intr);
  return m;
}

struct RectificationMaps {
  RemapGrid left_map, right_map;
  double focal = 0;     // rectified focal length (mean of the four input focals)
  double baseline = 0;  // T = |t|, mm
  double cx = 0, cy = 0;  // shared rectified principal point
  Eigen::Matrix3d left_rotation = Eigen::Matrix3d::Identity();   // camera -> rectified frame
  Eigen::Matrix3d right_rotation = Eigen::Matrix3d::Identity();
};

namespace detail {

// Forward-distorts and projects a rectified-frame ray back into the source
// image of camera (intr, dist, rot). Returns false when the ray leaves the
// camera's field of view or the lens model's working domain.
inline bool rectified_ray_to_source(double u, double v, const RectificationMaps& maps,
                                    const Eigen::Matrix3d& rot, const CameraIntrinsics& intr,
                                    const DistortionCoefficients& dist, float& sx, float& sy) {
  const Eigen::Vector3d dir = rot.transpose() *
      Eigen::Vector3d((u - maps.cx) / maps.focal, (v - maps.cy) / maps.focal, 1.0);
  if (dir.z() <= 0) return false;
  const NormalizedPoint n{dir.x() / dir.z(), dir.y() / dir.z()};
  if (n.x * n.x + n.y * n.y > dist.r2_max) return false;
  const NormalizedPoint q = distort(n, dist);
  sx = static_cast<float>(intr.fx * q.x + intr.cx);
  sy = static_cast<float>(intr.fy * q.y + intr.cy);
  return true;
}

}  // namespace detail

/// Rotates both cameras onto a common orientation whose x-axis runs along the
/// baseline, making epipolar lines horizontal, and emits per-pixel remap
/// grids into the original (distorted) images.
inline RectificationMaps build_rectification(const StereoRig& rig, int rows, int cols) {
  rig.validate();
  if (!(rig.t.norm() > 0)) throw DegenerateBaseline("build_rectification: zero baseline");

  // Average orientation: half the relative rotation, applied from the left.
  const Eigen::AngleAxisd rel(Eigen::Matrix3d(rig.R.transpose()));
  const Eigen::Matrix3d avg =
      Eigen::AngleAxisd(rel.angle() / 2.0, rel.axis()).toRotationMatrix();

  // Baseline direction in left-camera coordinates (right camera centre).
  const Eigen::Vector3d b = -rig.R.transpose() * rig.t;
  Eigen::Vector3d ex = b.normalized();
  if (ex.dot(avg.col(0)) < 0) ex = -ex;
  Eigen::Vector3d ez = avg.col(2) - avg.col(2).dot(ex) * ex;
  ez.normalize();
  const Eigen::Vector3d ey = ez.cross(ex);

  RectificationMaps maps;
  maps.left_rotation.row(0) = ex;
  maps.left_rotation.row(1) = ey;
  maps.left_rotation.row(2) = ez;
  maps.right_rotation = maps.left_rotation * rig.R.transpose();
  maps.baseline = rig.t.norm();
  maps.focal =
      (rig.left.intr.fx + rig.left.intr.fy + rig.right.intr.fx + rig.right.intr.fy) / 4.0;

  // Shared principal point: keep each camera's original principal ray where
  // it used to land, averaged over the pair, so the common field of view
  // stays centred.
  auto principal_shift = [&](const Eigen::Matrix3d& rot, const CameraIntrinsics& k,
                             double& ox, double& oy) {
    const Eigen::Vector3d z = rot * Eigen::Vector3d::UnitZ();
    ox = k.cx - maps.focal * z.x() / z.z();
    oy = k.cy - maps.focal * z.y() / z.z();
  };
  double lx, ly, rx, ry;
  principal_shift(maps.left_rotation, rig.left.intr, lx, ly);
  principal_shift(maps.right_rotation, rig.right.intr, rx, ry);
  maps.cx = (lx + rx) / 2.0;
  maps.cy = (ly + ry) / 2.0;

  maps.left_map = RemapGrid(rows, cols);
  maps.right_map = RemapGrid(rows, cols);
  constexpr float kOutside = -1e9f;
  detail::parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      float sx, sy;
      if (detail::rectified_ray_to_source(c, static_cast<double>(r), maps, maps.left_rotation,
                                          rig.left.intr, rig.left.dist, sx, sy)) {
        maps.left_map.src_x[i] = sx;
        maps.left_map.src_y[i] = sy;
      } else {
        maps.left_map.src_x[i] = kOutside;
        maps.left_map.src_y[i] = kOutside;
      }
      if (detail::rectified_ray_to_source(c, static_cast<double>(r), maps, maps.right_rotation,
                                          rig.right.intr, rig.right.dist, sx, sy)) {
        maps.right_map.src_x[i] = sx;
        maps.right_map.src_y[i] = sy;
      } else {
        maps.right_map.src_x[i] = kOutside;
        maps.right_map.src_y[i] = kOutside;
      }
    }
  });
  return maps;
}

/// Projects a world point (left-camera frame, mm) through one rectified
/// camera. For the right camera pass the rig to move into its frame first.
inline PixelPoint rectified_project(const Eigen::Vector3d& p_cam, const Eigen::Matrix3d& rect_rot,
                                    double focal, double cx, double cy) {
  const Eigen::Vector3d q = rect_rot * p_cam;
  if (!(q.z() > 0)) throw BehindCamera("rectified_project: z <= 0");
  return {focal * q.x() / q.z() + cx, focal * q.y() / q.z() + cy};
}

/// Depth from disparity: (X, Y, Z) = (x_l, y_l, f) * T / d, all lengths mm.
/// x_l, y_l are rectified left-image coordinates relative to the principal
/// point; f in pixels; T in mm.
inline WorldPoint triangulate(double disparity_px, double x_left, double y_left, double focal_px,
                              double baseline_mm) {
  if (!(disparity_px > 0)) throw NonPositiveDisparity("triangulate: disparity must be > 0");
  const double s = baseline_mm / disparity_px;
  return {x_left * s, y_left * s, focal_px * s};
}

// ---------------------------------------------------------------------------
// RMAP serialization: 16-byte header (magic "RMAP", u32 rows, u32 cols,
// u32 channels = 2), then interleaved float32 (src_x, src_y), little-endian.

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32le(std::string& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32le(out, v);
}

inline float get_f32le(const unsigned char* p) {
  const std::uint32_t v = get_u32le(p);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

}  // namespace detail

inline void save_remap_grid(const std::filesystem::path& path, const RemapGrid& g) {
  std::string buf;
  buf.reserve(16 + g.src_x.size() * 8);
  buf += "RMAP";
  detail::put_u32le(buf, static_cast<std::uint32_t>(g.rows));
  detail::put_u32le(buf, static_cast<std::uint32_t>(g.cols));
  detail::put_u32le(buf, 2);
  for (std::size_t i = 0; i < g.src_x.size(); ++i) {
    detail::put_f32le(buf, g.src_x[i]);
    detail::put_f32le(buf, g.src_y[i]);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline RemapGrid load_remap_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || buf.compare(0, 4, "RMAP") != 0)
    throw IoFailure(path.string() + ": not an RMAP file");
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint32_t rows = detail::get_u32le(p + 4);
  const std::uint32_t cols = detail::get_u32le(p + 8);
  const std::uint32_t channels = detail::get_u32le(p + 12);
  if (channels != 2) throw IoFailure(path.string() + ": expected 2 channels");
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (buf.size() != 16 + n * 8) throw IoFailure(path.string() + ": truncated RMAP data");
  RemapGrid g(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t i = 0; i < n; ++i) {
    g.src_x[i] = detail::get_f32le(p + 16 + i * 8);
    g.src_y[i] = detail::get_f32le(p + 16 + i * 8 + 4);
  }
  return g;
}

}  // namespace fusedim
