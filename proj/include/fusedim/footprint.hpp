#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "fusedim/error.hpp"
#include "fusedim/lrf.hpp"

namespace fusedim {

/// Ground-plane rectangle fitted to one LRF point cluster. From a single
/// static sweep only faces toward the sensor are seen, so `length` is the
/// visible chord of the object, not necessarily its full extent.
struct Footprint {
  Point2 center;        // mm
  double length_mm = 0; // >= width_mm
  double width_mm = 0;
  double yaw_rad = 0;   // orientation of the length axis, in (-pi/2, pi/2]
  int support_count = 0;
};

struct FootprintParams {
  double gap_mm = 120;  // consecutive-point distance that breaks a cluster
  int min_points = 5;
  Point2 origin;        // sensor position; defines the angular ordering
};

namespace detail {

inline double dist2(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace detail

/// Andrew monotone chain; returns hull in counter-clockwise order.
/// Collinear input degenerates to its two extreme points.
inline std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    while (k >= lower && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct OrientedRect {
  Point2 center;
  double length = 0;
  double width = 0;
  double yaw = 0;
};

/// Minimum-area oriented rectangle by rotating calipers over the convex
/// hull: one side of the optimum is collinear with a hull edge.
inline OrientedRect min_area_rect(std::span<const Point2> points) {
  if (points.empty()) throw Error("min_area_rect: empty point set");
  const std::vector<Point2> hull = convex_hull(points);

  auto rect_for_direction = [&](double ux, double uy) {
    double lo_u = 1e300, hi_u = -1e300, lo_v = 1e300, hi_v = -1e300;
    for (const auto& p : hull) {
      const double u = p.x * ux + p.y * uy;
      const double v = -p.x * uy + p.y * ux;
      lo_u = std::min(lo_u, u);
      hi_u = std::max(hi_u, u);
      lo_v = std::min(lo_v, v);
      hi_v = std::max(hi_v, v);
    }
    OrientedRect r;
    const double cu = (lo_u + hi_u) / 2, cv = (lo_v + hi_v) / 2;
    r.center = {cu * ux - cv * uy, cu * uy + cv * ux};
    r.length = hi_u - lo_u;
    r.width = hi_v - lo_v;
    r.yaw = std::atan2(uy, ux);
    return r;
  };

  OrientedRect best;
  double best_area = 1e300;
  bool found = false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len <= 0) continue;
    const OrientedRect r = rect_for_direction((b.x - a.x) / len, (b.y - a.y) / len);
    const double area = std::max(r.length, 1e-12) * std::max(r.width, 1e-12);
    if (!found || area < best_area) {
      best = r;
      best_area = area;
      found = true;
    }
  }
  if (!found) {  // single point or fully coincident points
    best.center = hull.empty() ? points[0] : hull[0];
    best.length = best.width = 0;
    best.yaw = 0;
  }
  if (best.width > best.length) {
    std::swap(best.width, best.length);
    best.yaw += std::numbers::pi / 2;
  }
  // normalize yaw of the length axis to (-pi/2, pi/2]
  while (best.yaw > std::numbers::pi / 2) best.yaw -= std::numbers::pi;
  while (best.yaw <= -std::numbers::pi / 2) best.yaw += std::numbers::pi;
  return best;
}

/// Splits angularly ordered points into clusters at range gaps, merging the
/// wrap-around pair so a cluster straddling the 0-degree ray stays whole.
inline std::vector<std::vector<Point2>> cluster_by_gap(std::span<const Point2> points,
                                                       const FootprintParams& params) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::stable_sort(pts.begin(), pts.end(), [&](const Point2& a, const Point2& b) {
    return std::atan2(a.y - params.origin.y, a.x - params.origin.x) <
           std::atan2(b.y - params.origin.y, b.x - params.origin.x);
  });
  std::vector<std::vector<Point2>> clusters;
  const double gap2 = params.gap_mm * params.gap_mm;
  for (const auto& p : pts) {
    if (clusters.empty() || detail::dist2(clusters.back().back(), p) > gap2)
      clusters.emplace_back();
    clusters.back().push_back(p);
  }
  if (clusters.size() > 1 &&
      detail::dist2(clusters.back().back(), clusters.front().front()) <= gap2) {
    auto& first = clusters.front();
    first.insert(first.begin(), clusters.back().begin(), clusters.back().end());
    clusters.pop_back();
  }
  return clusters;
}

inline std::vector<Footprint> extract_footprints(std::span<const Point2> points,
                                                 const FootprintParams& params = {}) {
  std::vector<Footprint> out;
  for (const auto& cluster : cluster_by_gap(points, params)) {
    if (static_cast<int>(cluster.size()) < params.min_points) continue;
    const OrientedRect rect = min_area_rect(cluster);
    Footprint fp;
    fp.center = rect.center;
    // a perfectly collinear cluster has zero rect width; floor it at the
    // sensor's 1 mm range resolution to keep length >= width > 0
    fp.width_mm = std::max(rect.width, 1.0);
    fp.length_mm = std::max(rect.length, fp.width_mm);
    fp.yaw_rad = rect.yaw;
    fp.support_count = static_cast<int>(cluster.size());
    out.push_back(fp);
  }
  return out;
}

}  // namespace fusedim
