#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fusedim/detail.hpp"
#include "fusedim/error.hpp"

namespace fusedim {

/// Row-major grayscale raster. T is uint8_t or uint16_t in this toolkit.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1) throw Error("Image: rows and cols must be >= 1");
  }
  Image(int rows, int cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 1 || cols < 1) throw Error("Image: rows and cols must be >= 1");
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
      throw Error("Image: data length must equal rows*cols");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  T& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  // replicate-border fetch
  T at_clamped(int r, int c) const {
    r = std::clamp(r, 0, rows_ - 1);
    c = std::clamp(c, 0, cols_ - 1);
    return at(r, c);
  }

  bool in_bounds(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }
  bool same_size(const Image& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Image& o) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using Image8 = Image<std::uint8_t>;
using Image16 = Image<std::uint16_t>;

/// Per-output-pixel source coordinates for remapping; same dimensions as the
/// output image. Stored as float32 planes to match the on-disk RMAP format.
struct RemapGrid {
  int rows = 0;
  int cols = 0;
  std::vector<float> src_x;  // rows*cols
  std::vector<float> src_y;

  RemapGrid() = default;
  RemapGrid(int r, int c)
      : rows(r), cols(c),
        src_x(static_cast<std::size_t>(r) * c, 0.f),
        src_y(static_cast<std::size_t>(r) * c, 0.f) {}

  static RemapGrid identity(int r, int c) {
    RemapGrid g(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) {
        g.src_x[static_cast<std::size_t>(i) * c + j] = static_cast<float>(j);
        g.src_y[static_cast<std::size_t>(i) * c + j] = static_cast<float>(i);
      }
    return g;
  }
};

/// Bilinear sample with constant-zero border: taps outside the image
/// contribute 0, so coordinates entirely outside fade to 0.
template <typename T>
double bilinear_at(const Image<T>& img, double x, double y) {
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  const int x0 = static_cast<int>(xf);
  const int y0 = static_cast<int>(yf);
  const double fx = x - xf;
  const double fy = y - yf;
  auto tap = [&](int r, int c) -> double {
    return img.in_bounds(r, c) ? static_cast<double>(img.at(r, c)) : 0.0;
  };
  return tap(y0, x0) * (1 - fx) * (1 - fy) + tap(y0, x0 + 1) * fx * (1 - fy) +
         tap(y0 + 1, x0) * (1 - fx) * fy + tap(y0 + 1, x0 + 1) * fx * fy;
}

/// Warps img by the given source-coordinate grid (bilinear, zero border).
/// Parallelized by row; output is bit-identical to sequential evaluation.
template <typename T>
Image<T> remap_image(const Image<T>& img, const RemapGrid& map) {
  if (map.rows < 1 || map.cols < 1) throw Error("remap_image: empty map");
  Image<T> out(map.rows, map.cols);
  detail::parallel_for(static_cast<std::size_t>(map.rows), [&](std::size_t r) {
    for (int c = 0; c < map.cols; ++c) {
      const std::size_t i = r * map.cols + c;
      const double v = bilinear_at(img, map.src_x[i], map.src_y[i]);
      const long long q = std::llround(v);
      out.at(static_cast<int>(r), c) = static_cast<T>(
          std::clamp<long long>(q, 0, std::numeric_limits<T>::max()));
    }
  });
  return out;
}

}  // namespace fusedim
