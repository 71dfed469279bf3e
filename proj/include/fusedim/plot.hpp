#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fusedim/error.hpp"

namespace fusedim {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;  // packed RGB

  RgbImage() = default;
  RgbImage(int r, int c, Rgb fill = {0, 0, 0})
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 3) {
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = fill.r;
      data[i + 1] = fill.g;
      data[i + 2] = fill.b;
    }
  }

  bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }

  void set(int r, int c, Rgb v) {
    if (!in_bounds(r, c)) return;
    const std::size_t i = (static_cast<std::size_t>(r) * cols + c) * 3;
    data[i] = v.r;
    data[i + 1] = v.g;
    data[i + 2] = v.b;
  }

  Rgb get(int r, int c) const {
    const std::size_t i = (static_cast<std::size_t>(r) * cols + c) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
};

inline void save_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << "P6\n" << img.cols << " " << img.rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline void draw_line(RgbImage& img, int r0, int c0, int r1, int c1, Rgb color) {
  // Bresenham
  const int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
  const int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
  int err = (dc > dr ? dc : -dr) / 2;
  while (true) {
    img.set(r0, c0, color);
    if (r0 == r1 && c0 == c1) break;
    const int e2 = err;
    if (e2 > -dc) {
      err -= dr;
      c0 += sc;
    }
    if (e2 < dr) {
      err += dc;
      r0 += sr;
    }
  }
}

namespace detail {

// 5x7 glyphs for map annotations, packed as 7 row bytes of 5 bits
struct Glyph {
  char ch;
  std::array<std::uint8_t, 7> rows;
};

inline const Glyph* find_glyph(char ch) {
  static const Glyph table[] = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
      {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x15}},
      {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
  };
  for (const auto& g : table)
    if (g.ch == ch) return &g;
  return nullptr;
}

}  // namespace detail

inline void draw_text(RgbImage& img, int r, int c, const std::string& text, Rgb color) {
  for (char ch : text) {
    if (const detail::Glyph* g = detail::find_glyph(ch)) {
      for (int gr = 0; gr < 7; ++gr)
        for (int gc = 0; gc < 5; ++gc)
          if (g->rows[gr] & (1 << (4 - gc))) img.set(r + gr, c + gc, color);
    }
    c += 6;
  }
}

}  // namespace fusedim
