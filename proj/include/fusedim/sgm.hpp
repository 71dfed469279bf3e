#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "fusedim/detail.hpp"
#include "fusedim/error.hpp"
#include "fusedim/image.hpp"
#include "fusedim/image_io.hpp"
#include "fusedim/keyvalue.hpp"

namespace fusedim {

/// Disparity fixed point: 1/16 pixel.
constexpr int kDisparityScale = 16;

struct MatcherParams {
  int block_size = 9;        // odd, >= 3
  int num_disparities = 112; // multiple of 16
  int min_disparity = 0;     // pixels
  int penalty_small = 8 * 9 * 9;   // cost of |delta d| = 1 between neighbours
  int penalty_large = 32 * 9 * 9;  // cost of |delta d| > 1
  int paths = 8;             // 4 or 8
  double lr_threshold = 1.0; // pixels; left-right consistency gate
  int uniqueness_ratio = 10; // percent; negative disables the check

  // Penalties scale with the block area, following the SAD cost magnitude.
  static MatcherParams for_block(int block) {
    MatcherParams p;
    p.block_size = block;
    p.penalty_small = 8 * block * block;
    p.penalty_large = 32 * block * block;
    return p;
  }

  void validate() const {
    if (block_size < 3 || block_size % 2 == 0)
      throw Error("matcher: block_size must be odd and >= 3");
    if (num_disparities < 16 || num_disparities % 16 != 0)
      throw Error("matcher: num_disparities must be a positive multiple of 16");
    if (!(penalty_small > 0 && penalty_small < penalty_large))
      throw Error("matcher: need 0 < penalty_small < penalty_large");
    if (paths != 4 && paths != 8) throw Error("matcher: paths must be 4 or 8");
  }
};

/// Suggested disparity range when an LRF range reading for the scene is
/// available: next multiple of 16 at or above f*T/z + 16.
inline int suggest_num_disparities(double focal_px, double baseline_mm, double z_mm) {
  if (!(z_mm > 0)) throw Error("suggest_num_disparities: z must be > 0");
  const double needed = focal_px * baseline_mm / z_mm + 16.0;
  const int n = static_cast<int>((static_cast<long>(std::ceil(needed)) + 15) / 16 * 16);
  return std::max(16, n);
}

struct DisparityMap {
  static constexpr std::int32_t kInvalid = std::numeric_limits<std::int32_t>::min();

  int rows = 0;
  int cols = 0;
  int min_disparity = 0;
  int num_disparities = 0;
  std::vector<std::int32_t> fp;  // 1/16-px fixed point; kInvalid marks holes

  DisparityMap() = default;
  DisparityMap(int r, int c, int min_d, int num_d)
      : rows(r), cols(c), min_disparity(min_d), num_disparities(num_d),
        fp(static_cast<std::size_t>(r) * c, kInvalid) {}

  std::int32_t& at(int r, int c) { return fp[static_cast<std::size_t>(r) * cols + c]; }
  std::int32_t at(int r, int c) const { return fp[static_cast<std::size_t>(r) * cols + c]; }
  bool valid(int r, int c) const { return at(r, c) != kInvalid; }
  double pixels(int r, int c) const { return at(r, c) / double(kDisparityScale); }

  double valid_fraction() const {
    if (fp.empty()) return 0;
    std::size_t n = 0;
    for (auto v : fp) n += (v != kInvalid);
    return static_cast<double>(n) / static_cast<double>(fp.size());
  }

  bool operator==(const DisparityMap& o) const = default;
};

struct CostVolume {
  int rows = 0;
  int cols = 0;
  int num_disp = 0;
  std::uint32_t saturation = 0;  // cost assigned where the window does not fit
  std::vector<std::uint32_t> c;  // (r, col, d), d fastest

  CostVolume() = default;
  CostVolume(int r, int col, int nd, std::uint32_t sat)
      : rows(r), cols(col), num_disp(nd), saturation(sat),
        c(static_cast<std::size_t>(r) * col * nd, sat) {}

  std::uint32_t& at(int r, int col, int d) {
    return c[(static_cast<std::size_t>(r) * cols + col) * num_disp + d];
  }
  std::uint32_t at(int r, int col, int d) const {
    return c[(static_cast<std::size_t>(r) * cols + col) * num_disp + d];
  }
};

/// Block-SAD matching cost. cost(p, d) sums |left - right| over the
/// block_size window with the right block shifted left by d; windows that do
/// not fit in either image get the saturation constant.
inline CostVolume matching_cost(const Image8& left, const Image8& right,
                                const MatcherParams& params) {
  params.validate();
  if (!left.same_size(right)) throw DimensionMismatch("matching_cost: image sizes differ");
  const int rows = left.rows(), cols = left.cols();
  const int nd = params.num_disparities;
  const int h = params.block_size / 2;
  const std::uint32_t sat =
      static_cast<std::uint32_t>(params.block_size) * params.block_size * 255u + 1u;
  CostVolume vol(rows, cols, nd, sat);

  detail::parallel_for(static_cast<std::size_t>(nd), [&](std::size_t di) {
    const int d = params.min_disparity + static_cast<int>(di);
    // integral image of the absolute-difference plane for this disparity
    std::vector<std::uint32_t> integral(static_cast<std::size_t>(rows + 1) * (cols + 1), 0);
    auto ii = [&](int r, int c) -> std::uint32_t& {
      return integral[static_cast<std::size_t>(r) * (cols + 1) + c];
    };
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const int rc = c - d;
        const std::uint32_t ad =
            (rc >= 0 && rc < cols)
                ? static_cast<std::uint32_t>(
                      std::abs(int(left.at(r, c)) - int(right.at(r, rc))))
                : 0u;
        ii(r + 1, c + 1) = ad + ii(r, c + 1) + ii(r + 1, c) - ii(r, c);
      }
    const int c_lo = std::max(h, d + h);
    const int c_hi = std::min(cols - 1 - h, cols - 1 - h + d);
    for (int r = h; r < rows - h; ++r)
      for (int c = c_lo; c <= c_hi; ++c)
        vol.at(r, c, static_cast<int>(di)) =
            ii(r + h + 1, c + h + 1) - ii(r - h, c + h + 1) - ii(r + h + 1, c - h) +
            ii(r - h, c - h);
  });
  return vol;
}

namespace detail {

inline std::vector<std::pair<int, int>> path_starts(int rows, int cols, int dr, int dc) {
  std::vector<std::pair<int, int>> starts;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int pr = r - dr, pc = c - dc;
      if (pr < 0 || pr >= rows || pc < 0 || pc >= cols) starts.emplace_back(r, c);
    }
  return starts;
}

}  // namespace detail

/// One SGM path direction, accumulated into `accum`:
///   L(p,d) = C(p,d) + min(L(p-r,d), L(p-r,d+-1)+P1, min_k L(p-r,k)+P2)
///            - min_k L(p-r,k),     L = C at the image border.
inline void aggregate_path(const CostVolume& costs, const MatcherParams& params, int dr, int dc,
                           CostVolume& accum) {
  const int rows = costs.rows, cols = costs.cols, nd = costs.num_disp;
  const auto starts = detail::path_starts(rows, cols, dr, dc);
  const auto p1 = static_cast<std::uint32_t>(params.penalty_small);
  const auto p2 = static_cast<std::uint32_t>(params.penalty_large);

  detail::parallel_for(starts.size(), [&](std::size_t si) {
    std::vector<std::uint32_t> prev(nd), cur(nd);
    int r = starts[si].first, c = starts[si].second;
    bool first = true;
    std::uint32_t prev_min = 0;
    while (r >= 0 && r < rows && c >= 0 && c < cols) {
      std::uint32_t cur_min = std::numeric_limits<std::uint32_t>::max();
      for (int d = 0; d < nd; ++d) {
        std::uint32_t l;
        if (first) {
          l = costs.at(r, c, d);
        } else {
          std::uint32_t best = prev[d];
          if (d > 0) best = std::min(best, prev[d - 1] + p1);
          if (d < nd - 1) best = std::min(best, prev[d + 1] + p1);
          best = std::min(best, prev_min + p2);
          l = costs.at(r, c, d) + best - prev_min;
        }
        cur[d] = l;
        cur_min = std::min(cur_min, l);
        accum.at(r, c, d) += l;
      }
      prev.swap(cur);
      prev_min = cur_min;
      first = false;
      r += dr;
      c += dc;
    }
  });
}

/// Sum of 4 or 8 path aggregations. Directions are processed in a fixed
/// order and each pixel is touched once per direction, so the result is
/// bit-identical for any thread count.
inline CostVolume aggregate(const CostVolume& costs, const MatcherParams& params) {
  params.validate();
  CostVolume accum(costs.rows, costs.cols, costs.num_disp, costs.saturation);
  std::fill(accum.c.begin(), accum.c.end(), 0u);
  static constexpr int kDirs[8][2] = {{0, 1}, {0, -1}, {-1, 0}, {1, 0},
                                      {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  for (int i = 0; i < params.paths; ++i)
    aggregate_path(costs, params, kDirs[i][0], kDirs[i][1], accum);
  return accum;
}

namespace detail {

// Parabola vertex through (-1, s0), (0, s1), (+1, s2), clamped to [-1/2, 1/2].
inline double subpixel_offset(std::uint32_t s0, std::uint32_t s1, std::uint32_t s2) {
  const double den = double(s0) + double(s2) - 2.0 * double(s1);
  if (den <= 0) return 0.0;
  return std::clamp((double(s0) - double(s2)) / (2.0 * den), -0.5, 0.5);
}

inline bool uniqueness_reject(const CostVolume& s, int r, int c, int best_d, int ratio) {
  if (ratio < 0) return false;
  const std::uint64_t lhs_scale = 100u + static_cast<std::uint64_t>(ratio);
  const std::uint64_t best = s.at(r, c, best_d);
  for (int d = 0; d < s.num_disp; ++d) {
    if (std::abs(d - best_d) <= 1) continue;
    if (static_cast<std::uint64_t>(s.at(r, c, d)) * 100u <= best * lhs_scale) return true;
  }
  return false;
}

}  // namespace detail

/// Winner-take-all with parabola subpixel refinement and uniqueness check,
/// left image as reference. Ties resolve to the smallest disparity.
inline DisparityMap select_disparity(const CostVolume& aggregated, const MatcherParams& params) {
  const int rows = aggregated.rows, cols = aggregated.cols, nd = aggregated.num_disp;
  DisparityMap out(rows, cols, params.min_disparity, nd);
  detail::parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
    for (int c = 0; c < cols; ++c) {
      int best_d = 0;
      std::uint32_t best = aggregated.at(static_cast<int>(r), c, 0);
      for (int d = 1; d < nd; ++d) {
        const std::uint32_t v = aggregated.at(static_cast<int>(r), c, d);
        if (v < best) {
          best = v;
          best_d = d;
        }
      }
      if (detail::uniqueness_reject(aggregated, static_cast<int>(r), c, best_d,
                                    params.uniqueness_ratio))
        continue;
      double d_sub = params.min_disparity + best_d;
      if (best_d > 0 && best_d < nd - 1)
        d_sub += detail::subpixel_offset(aggregated.at(static_cast<int>(r), c, best_d - 1), best,
                                         aggregated.at(static_cast<int>(r), c, best_d + 1));
      out.at(static_cast<int>(r), c) =
          static_cast<std::int32_t>(std::llround(d_sub * kDisparityScale));
    }
  });
  return out;
}

/// Right-reference disparity from the same left-reference volume:
/// d_R(x_r) = argmin_d S(x_r + d, d). Used for the left-right check.
inline DisparityMap select_disparity_right(const CostVolume& aggregated,
                                           const MatcherParams& params) {
  const int rows = aggregated.rows, cols = aggregated.cols, nd = aggregated.num_disp;
  DisparityMap out(rows, cols, params.min_disparity, nd);
  detail::parallel_for(static_cast<std::size_t>(rows), [&](std::size_t r) {
    for (int c = 0; c < cols; ++c) {
      int best_d = -1;
      std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
      for (int d = 0; d < nd; ++d) {
        const int xl = c + params.min_disparity + d;
        if (xl < 0 || xl >= cols) continue;
        const std::uint32_t v = aggregated.at(static_cast<int>(r), xl, d);
        if (v < best) {
          best = v;
          best_d = d;
        }
      }
      if (best_d < 0) continue;
      double d_sub = params.min_disparity + best_d;
      const int xl = c + params.min_disparity + best_d;
      if (best_d > 0 && best_d < nd - 1 && xl - 1 >= 0 && xl + 1 < cols)
        d_sub += detail::subpixel_offset(aggregated.at(static_cast<int>(r), xl - 1, best_d - 1),
                                         best,
                                         aggregated.at(static_cast<int>(r), xl + 1, best_d + 1));
      out.at(static_cast<int>(r), c) =
          static_cast<std::int32_t>(std::llround(d_sub * kDisparityScale));
    }
  });
  return out;
}

/// Keeps a left pixel iff |d_L(x) - d_R(x - d_L(x))| <= threshold pixels.
inline DisparityMap lr_consistency(const DisparityMap& left, const DisparityMap& right,
                                   double threshold_px) {
  if (left.rows != right.rows || left.cols != right.cols)
    throw DimensionMismatch("lr_consistency: map sizes differ");
  if (std::isinf(threshold_px)) return left;
  DisparityMap out = left;
  const auto thr_fp = static_cast<std::int64_t>(std::llround(threshold_px * kDisparityScale));
  for (int r = 0; r < left.rows; ++r)
    for (int c = 0; c < left.cols; ++c) {
      const std::int32_t dl = left.at(r, c);
      if (dl == DisparityMap::kInvalid) continue;
      const int xr = c - static_cast<int>(std::llround(dl / double(kDisparityScale)));
      if (xr < 0 || xr >= left.cols || !right.valid(r, xr) ||
          std::abs(std::int64_t(dl) - right.at(r, xr)) > thr_fp)
        out.at(r, c) = DisparityMap::kInvalid;
    }
  return out;
}

/// Linear 8-bit mapping for the intensity-based downstream stages:
/// min_disparity -> 1, highest representable disparity -> 255, invalid -> 0.
struct DisparityNormalization {
  std::int32_t min_fp = 0;
  std::int32_t max_fp = 0;

  int intensity_for(std::int32_t fp) const {
    if (max_fp <= min_fp) return 255;
    const double t = double(fp - min_fp) / double(max_fp - min_fp);
    return std::clamp(1 + static_cast<int>(std::lround(t * 254.0)), 1, 255);
  }
  double fp_for(int intensity) const {
    return min_fp + (intensity - 1) * double(max_fp - min_fp) / 254.0;
  }
};

inline std::pair<Image8, DisparityNormalization> normalize_to_image(const DisparityMap& disp) {
  DisparityNormalization norm;
  norm.min_fp = disp.min_disparity * kDisparityScale;
  norm.max_fp = (disp.min_disparity + disp.num_disparities) * kDisparityScale - 1;
  Image8 img(disp.rows, disp.cols, 0);
  for (int r = 0; r < disp.rows; ++r)
    for (int c = 0; c < disp.cols; ++c)
      img.at(r, c) = disp.valid(r, c)
                         ? static_cast<std::uint8_t>(norm.intensity_for(disp.at(r, c)))
                         : 0;
  return {std::move(img), norm};
}

/// Full matcher: cost, aggregation, WTA both references, LR consistency.
inline DisparityMap compute_disparity(const Image8& left, const Image8& right,
                                      const MatcherParams& params) {
  CostVolume aggregated = [&] {
    const CostVolume costs = matching_cost(left, right, params);
    return aggregate(costs, params);
  }();
  const DisparityMap dl = select_disparity(aggregated, params);
  const DisparityMap dr = select_disparity_right(aggregated, params);
  return lr_consistency(dl, dr, params.lr_threshold);
}

// ---------------------------------------------------------------------------
// Serialization: 16-bit PGM holding fixed-point disparity + 1 (0 = invalid)
// plus a text sidecar with the range and the normalization mapping.

inline void save_disparity(const std::filesystem::path& path, const DisparityMap& disp) {
  if (disp.min_disparity < 0)
    throw IoFailure("save_disparity: negative disparities are not representable");
  Image16 img(disp.rows, disp.cols, 0);
  for (int r = 0; r < disp.rows; ++r)
    for (int c = 0; c < disp.cols; ++c) {
      if (!disp.valid(r, c)) continue;
      const std::int32_t v = disp.at(r, c) + 1;
      if (v < 1 || v > 65535) throw IoFailure("save_disparity: value out of 16-bit range");
      img.at(r, c) = static_cast<std::uint16_t>(v);
    }
  save_pgm(path, img);
  DisparityNormalization norm;
  norm.min_fp = disp.min_disparity * kDisparityScale;
  norm.max_fp = (disp.min_disparity + disp.num_disparities) * kDisparityScale - 1;
  std::ofstream meta(path.string() + ".meta");
  if (!meta) throw IoFailure("cannot write " + path.string() + ".meta");
  meta << "min_disparity " << disp.min_disparity << "\n"
       << "num_disparities " << disp.num_disparities << "\n"
       << "norm_min_fp " << norm.min_fp << "\n"
       << "norm_max_fp " << norm.max_fp << "\n";
}

inline DisparityMap load_disparity(const std::filesystem::path& path) {
  const Image16 img = load_pgm16(path);
  const KeyValueFile meta = KeyValueFile::parse_file(path.string() + ".meta");
  DisparityMap disp(img.rows(), img.cols(),
                    static_cast<int>(meta.require_number("", "min_disparity")),
                    static_cast<int>(meta.require_number("", "num_disparities")));
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      if (img.at(r, c) != 0) disp.at(r, c) = static_cast<std::int32_t>(img.at(r, c)) - 1;
  return disp;
}

}  // namespace fusedim
