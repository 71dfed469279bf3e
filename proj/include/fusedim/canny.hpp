#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fusedim/error.hpp"
#include "fusedim/image.hpp"

namespace fusedim {

struct EdgeParams {
  double gaussian_sigma = 1.4;  // pixels
  double low_threshold = 20;    // gradient magnitude units
  double high_threshold = 60;

  void validate() const {
    if (!(gaussian_sigma > 0)) throw Error("edge params: gaussian_sigma must be > 0");
    if (!(low_threshold > 0 && low_threshold < high_threshold))
      throw Error("edge params: need 0 < low_threshold < high_threshold");
  }
};

struct PixelRect {
  int row0 = 0;
  int col0 = 0;
  int rows = 0;
  int cols = 0;
  bool operator==(const PixelRect&) const = default;
};

namespace detail {

inline std::vector<double> gaussian_smooth(const Image8& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  const int rows = img.rows(), cols = img.cols();
  std::vector<double> horiz(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v = 0;
      for (int i = -radius; i <= radius; ++i)
        v += kernel[i + radius] * img.at_clamped(r, c + i);
      horiz[static_cast<std::size_t>(r) * cols + c] = v;
    }
  std::vector<double> out(horiz.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v = 0;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = std::clamp(r + i, 0, rows - 1);
        v += kernel[i + radius] * horiz[static_cast<std::size_t>(rr) * cols + c];
      }
      out[static_cast<std::size_t>(r) * cols + c] = v;
    }
  return out;
}

}  // namespace detail

/// Canny edges: Gaussian smoothing, 3x3 Sobel gradients, non-maximum
/// suppression with 4-sector direction quantization, then double-threshold
/// hysteresis with 8-connectivity. Output is 255 on edges, 0 elsewhere.
inline Image8 canny_edges(const Image8& img, const EdgeParams& params) {
  params.validate();
  const int rows = img.rows(), cols = img.cols();
  const std::vector<double> s = detail::gaussian_smooth(img, params.gaussian_sigma);
  auto sm = [&](int r, int c) {
    return s[static_cast<std::size_t>(std::clamp(r, 0, rows - 1)) * cols +
             std::clamp(c, 0, cols - 1)];
  };

  std::vector<double> gx(s.size(), 0), gy(s.size(), 0), mag(s.size(), 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      gx[i] = (sm(r - 1, c + 1) + 2 * sm(r, c + 1) + sm(r + 1, c + 1)) -
              (sm(r - 1, c - 1) + 2 * sm(r, c - 1) + sm(r + 1, c - 1));
      gy[i] = (sm(r + 1, c - 1) + 2 * sm(r + 1, c) + sm(r + 1, c + 1)) -
              (sm(r - 1, c - 1) + 2 * sm(r - 1, c) + sm(r - 1, c + 1));
      mag[i] = std::hypot(gx[i], gy[i]);
    }

  // NMS. tan(67.5 deg) picks the sector; the strict/loose comparison pair
  // keeps exactly one pixel of an equal-magnitude plateau.
  constexpr double kSectorRatio = 2.414213562373095;
  std::vector<std::uint8_t> nms(s.size(), 0);
  for (int r = 1; r < rows - 1; ++r)
    for (int c = 1; c < cols - 1; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      const double m = mag[i];
      if (m <= 0) continue;
      const double ax = std::abs(gx[i]), ay = std::abs(gy[i]);
      int dr, dc;
      if (ax > kSectorRatio * ay) {
        dr = 0; dc = 1;
      } else if (ay > kSectorRatio * ax) {
        dr = 1; dc = 0;
      } else if ((gx[i] > 0) == (gy[i] > 0)) {
        dr = 1; dc = 1;
      } else {
        dr = 1; dc = -1;
      }
      const double n_minus = mag[static_cast<std::size_t>(r - dr) * cols + (c - dc)];
      const double n_plus = mag[static_cast<std::size_t>(r + dr) * cols + (c + dc)];
      if (m > n_minus && m >= n_plus) nms[i] = 1;
    }

  // hysteresis from strong pixels through weak ones
  Image8 edges(rows, cols, 0);
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      if (nms[i] && mag[i] >= params.high_threshold && edges.at(r, c) == 0) {
        edges.at(r, c) = 255;
        stack.emplace_back(r, c);
        while (!stack.empty()) {
          auto [pr, pc] = stack.back();
          stack.pop_back();
          for (int ddr = -1; ddr <= 1; ++ddr)
            for (int ddc = -1; ddc <= 1; ++ddc) {
              const int nr = pr + ddr, nc = pc + ddc;
              if (!edges.in_bounds(nr, nc) || edges.at(nr, nc)) continue;
              const std::size_t ni = static_cast<std::size_t>(nr) * cols + nc;
              if (nms[ni] && mag[ni] >= params.low_threshold) {
                edges.at(nr, nc) = 255;
                stack.emplace_back(nr, nc);
              }
            }
        }
      }
    }
  return edges;
}

/// Tight axis-aligned bounding box of all nonzero pixels.
inline PixelRect bounding_rect(const Image8& edges) {
  int r0 = edges.rows(), r1 = -1, c0 = edges.cols(), c1 = -1;
  for (int r = 0; r < edges.rows(); ++r)
    for (int c = 0; c < edges.cols(); ++c)
      if (edges.at(r, c)) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
  if (r1 < 0) throw NoEdges("bounding_rect: no edge pixels");
  return {r0, c0, r1 - r0 + 1, c1 - c0 + 1};
}

}  // namespace fusedim
