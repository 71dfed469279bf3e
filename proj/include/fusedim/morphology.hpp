#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>

#include "fusedim/detail.hpp"
#include "fusedim/error.hpp"
#include "fusedim/image.hpp"

namespace fusedim {

/// Solid rectangle, centre-anchored.
struct StructuringElement {
  int width = 5;
  int height = 5;

  void validate() const {
    if (width < 1 || height < 1 || width % 2 == 0 || height % 2 == 0)
      throw Error("structuring element: width and height must be odd and >= 1");
  }
};

/// Flat grayscale dilation (max filter) with replicate borders. A solid
/// rectangle is separable, so this runs a horizontal then a vertical max.
template <typename T>
Image<T> dilate(const Image<T>& img, const StructuringElement& kernel, int iterations = 1) {
  kernel.validate();
  if (iterations < 1) throw Error("dilate: iterations must be >= 1");
  const int hw = kernel.width / 2;
  const int hh = kernel.height / 2;
  Image<T> cur = img;
  Image<T> tmp(img.rows(), img.cols());
  Image<T> next(img.rows(), img.cols());
  for (int it = 0; it < iterations; ++it) {
    detail::parallel_for(static_cast<std::size_t>(img.rows()), [&](std::size_t r) {
      for (int c = 0; c < img.cols(); ++c) {
        T m = cur.at_clamped(static_cast<int>(r), c - hw);
        for (int k = -hw + 1; k <= hw; ++k)
          m = std::max(m, cur.at_clamped(static_cast<int>(r), c + k));
        tmp.at(static_cast<int>(r), c) = m;
      }
    });
    detail::parallel_for(static_cast<std::size_t>(img.rows()), [&](std::size_t r) {
      for (int c = 0; c < img.cols(); ++c) {
        T m = tmp.at_clamped(static_cast<int>(r) - hh, c);
        for (int k = -hh + 1; k <= hh; ++k)
          m = std::max(m, tmp.at_clamped(static_cast<int>(r) + k, c));
        next.at(static_cast<int>(r), c) = m;
      }
    });
    std::swap(cur, next);
  }
  return cur;
}

struct MaxIntensityResult {
  int threshold = 0;  // global max minus delta
  Image8 mask;        // 255 where intensity >= threshold (zeros never marked)
};

/// Threshold at (global max - delta). Zero-valued pixels are invalid
/// disparity samples and never enter the mask.
inline MaxIntensityResult max_intensity_threshold(const Image8& img, int delta) {
  int max_v = 0;
  for (auto v : img.data()) max_v = std::max(max_v, int(v));
  if (max_v == 0) throw EmptyDisparity("max_intensity_threshold: image has no nonzero pixel");
  MaxIntensityResult res;
  res.threshold = max_v - delta;
  res.mask = Image8(img.rows(), img.cols(), 0);
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c)
      if (img.at(r, c) > 0 && int(img.at(r, c)) >= res.threshold) res.mask.at(r, c) = 255;
  return res;
}

}  // namespace fusedim
