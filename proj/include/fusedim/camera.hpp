#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>

#include "fusedim/error.hpp"

namespace fusedim {

struct PixelPoint {
  double u = 0;  // pixels
  double v = 0;
};

struct NormalizedPoint {
  double x = 0;  // x' = x/z
  double y = 0;
};

struct WorldPoint {
  double X = 0;  // mm
  double Y = 0;
  double Z = 0;
};

struct CameraIntrinsics {
  double fx = 0;  // pixels
  double fy = 0;
  double cx = 0;
  double cy = 0;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw Error("intrinsics: fx and fy must be > 0");
    if (!std::isfinite(cx) || !std::isfinite(cy))
      throw Error("intrinsics: principal point must be finite");
  }

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  Eigen::Matrix3d inverse_matrix() const {
    Eigen::Matrix3d k;
    k << 1.0 / fx, 0, -cx / fx, 0, 1.0 / fy, -cy / fy, 0, 0, 1;
    return k;
  }
};

// The principal point normally sits inside the image; outside is suspicious
// but legal (lens-shift style rigs), so it warns rather than errors.
inline std::optional<std::string> check_principal_point(const CameraIntrinsics& k, int rows,
                                                        int cols) {
  if (k.cx < 0 || k.cx > cols - 1 || k.cy < 0 || k.cy > rows - 1)
    return "principal point (" + std::to_string(k.cx) + ", " + std::to_string(k.cy) +
           ") lies outside the " + std::to_string(cols) + "x" + std::to_string(rows) + " image";
  return std::nullopt;
}

/// Rational radial (k1..k6) + tangential (p1, p2) lens model. Unset trailing
/// coefficients are exactly zero. The rational denominator must stay positive
/// over the declared working domain r^2 <= r2_max.
struct DistortionCoefficients {
  double k1 = 0, k2 = 0, k3 = 0;
  double k4 = 0, k5 = 0, k6 = 0;
  double p1 = 0, p2 = 0;
  double r2_max = 4.0;  // working-domain radius 2.0 in normalized coords

  // Accepts 0, 3 (k1 k2 k3), 5 (+ p1 p2) or 8 (+ k4 k5 k6) values, matching
  // the calibration-file layout; anything longer is rejected.
  static DistortionCoefficients from_values(std::span<const double> v, double r2_max = 4.0) {
    DistortionCoefficients d;
    d.r2_max = r2_max;
    switch (v.size()) {
      case 0:
        break;
      case 3:
        d.k1 = v[0]; d.k2 = v[1]; d.k3 = v[2];
        break;
      case 5:
        d.k1 = v[0]; d.k2 = v[1]; d.k3 = v[2]; d.p1 = v[3]; d.p2 = v[4];
        break;
      case 8:
        d.k1 = v[0]; d.k2 = v[1]; d.k3 = v[2]; d.p1 = v[3]; d.p2 = v[4];
        d.k4 = v[5]; d.k5 = v[6]; d.k6 = v[7];
        break;
      default:
        throw ConfigError("distortion: expected 3, 5 or 8 coefficients, got " +
                          std::to_string(v.size()));
    }
    d.validate();
    return d;
  }

  void validate() const {
    for (double c : {k1, k2, k3, k4, k5, k6, p1, p2})
      if (!std::isfinite(c)) throw Error("distortion: coefficients must be finite");
    // denominator positivity over the working domain, sampled densely
    for (int i = 0; i <= 256; ++i) {
      const double r2 = r2_max * i / 256.0;
      if (denominator(r2) <= 0)
        throw DenominatorNonPositive("distortion: rational denominator <= 0 at r2 = " +
                                     std::to_string(r2));
    }
  }

  bool is_zero() const {
    return k1 == 0 && k2 == 0 && k3 == 0 && k4 == 0 && k5 == 0 && k6 == 0 && p1 == 0 && p2 == 0;
  }

  double numerator(double r2) const { return 1 + r2 * (k1 + r2 * (k2 + r2 * k3)); }
  double denominator(double r2) const { return 1 + r2 * (k4 + r2 * (k5 + r2 * k6)); }
};

/// Forward lens distortion on a normalized image point.
inline NormalizedPoint distort(const NormalizedPoint& p, const DistortionCoefficients& d) {
  const double r2 = p.x * p.x + p.y * p.y;
  const double den = d.denominator(r2);
  if (den <= 0)
    throw DenominatorNonPositive("distort: rational denominator <= 0 at r2 = " +
                                 std::to_string(r2));
  const double ratio = d.numerator(r2) / den;
  const double xy2 = 2 * p.x * p.y;
  return {p.x * ratio + d.p1 * xy2 + d.p2 * (r2 + 2 * p.x * p.x),
          p.y * ratio + d.p2 * xy2 + d.p1 * (r2 + 2 * p.y * p.y)};
}

/// Inverse of distort by fixed-point iteration. Converged when the forward
/// model reproduces p within tol (infinity norm).
inline NormalizedPoint undistort(const NormalizedPoint& p, const DistortionCoefficients& d,
                                 double tol = 1e-10, int max_iter = 50) {
  NormalizedPoint q = p;
  for (int it = 0; it < max_iter; ++it) {
    const NormalizedPoint f = distort(q, d);
    if (std::abs(f.x - p.x) <= tol && std::abs(f.y - p.y) <= tol) return q;
    const double r2 = q.x * q.x + q.y * q.y;
    const double den = d.denominator(r2);
    if (den <= 0)
      throw DenominatorNonPositive("undistort: rational denominator <= 0 during iteration");
    const double inv_ratio = den / d.numerator(r2);
    const double xy2 = 2 * q.x * q.y;
    q.x = (p.x - (d.p1 * xy2 + d.p2 * (r2 + 2 * q.x * q.x))) * inv_ratio;
    q.y = (p.y - (d.p2 * xy2 + d.p1 * (r2 + 2 * q.y * q.y))) * inv_ratio;
  }
  const NormalizedPoint f = distort(q, d);
  if (std::abs(f.x - p.x) <= tol && std::abs(f.y - p.y) <= tol) return q;
  throw NoConvergence("undistort: no convergence after " + std::to_string(max_iter) +
                      " iterations");
}

struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Eigen::Vector3d apply(const WorldPoint& p) const {
    return R * Eigen::Vector3d(p.X, p.Y, p.Z) + t;
  }
};

/// Full projection: rigid transform, perspective division, lens distortion,
/// then pixel coordinates.
inline PixelPoint project(const WorldPoint& p, const RigidTransform& pose,
                          const CameraIntrinsics& intr, const DistortionCoefficients& dist) {
  const Eigen::Vector3d q = pose.apply(p);
  if (!(q.z() > 0)) throw BehindCamera("project: point has camera-frame z <= 0");
  const NormalizedPoint n{q.x() / q.z(), q.y() / q.z()};
  const NormalizedPoint d = distort(n, dist);
  return {intr.fx * d.x + intr.cx, intr.fy * d.y + intr.cy};
}

}  // namespace fusedim
