#include <catch2/catch_amalgamated.hpp>
#include <random>
#include <set>

#include "fusedim/morphology.hpp"

using namespace fusedim;

namespace {

Image8 random_image(int rows, int cols, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  Image8 img(rows, cols);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(dist(rng));
  return img;
}

// brute-force dilation oracle: per-pixel max over the kernel support with
// replicate borders
Image8 dilate_oracle(const Image8& img, int kw, int kh) {
  Image8 out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      std::uint8_t m = 0;
      for (int dr = -kh / 2; dr <= kh / 2; ++dr)
        for (int dc = -kw / 2; dc <= kw / 2; ++dc)
          m = std::max(m, img.at_clamped(r + dr, c + dc));
      out.at(r, c) = m;
    }
  return out;
}

}  // namespace

TEST_CASE("a single bright pixel dilates to a kernel-sized block", "[morphology]") {
  Image8 img(9, 9, 0);
  img.at(4, 4) = 200;
  const Image8 out = dilate(img, {3, 3});
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) {
      const bool inside = std::abs(r - 4) <= 1 && std::abs(c - 4) <= 1;
      CHECK(int(out.at(r, c)) == (inside ? 200 : 0));
    }
}

TEST_CASE("constant images are fixed points of dilation", "[morphology]") {
  const Image8 img(7, 11, 137);
  CHECK(dilate(img, {5, 5}, 1) == img);
  CHECK(dilate(img, {3, 7}, 4) == img);
}

TEST_CASE("dilation agrees with the brute-force max oracle", "[morphology]") {
  for (std::uint32_t seed = 0; seed < 100; ++seed) {
    const Image8 img = random_image(16, 16, 1000 + seed);
    CHECK(dilate(img, {3, 3}) == dilate_oracle(img, 3, 3));
  }
  // non-square kernel spot check
  const Image8 img = random_image(20, 14, 77);
  CHECK(dilate(img, {5, 3}) == dilate_oracle(img, 5, 3));
}

TEST_CASE("dilation is extensive and monotone", "[morphology]") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Image8 a = random_image(12, 12, 2000 + trial);
    Image8 b = a;  // b >= a pixelwise
    std::uniform_int_distribution<int> bump(0, 60);
    for (auto& v : b.data()) v = static_cast<std::uint8_t>(std::min(255, v + bump(rng)));

    const Image8 da = dilate(a, {5, 5});
    const Image8 db = dilate(b, {5, 5});
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 12; ++c) {
        CHECK(da.at(r, c) >= a.at(r, c));   // extensivity
        CHECK(db.at(r, c) >= da.at(r, c));  // monotonicity
      }
  }
}

TEST_CASE("dilation commutes with integer translation away from borders", "[morphology]") {
  const Image8 img = random_image(24, 24, 42);
  Image8 shifted(24, 24, 0);
  for (int r = 0; r < 21; ++r)
    for (int c = 0; c < 19; ++c) shifted.at(r + 3, c + 5) = img.at(r, c);
  const Image8 da = dilate(img, {3, 3});
  const Image8 ds = dilate(shifted, {3, 3});
  for (int r = 2; r < 19; ++r)
    for (int c = 2; c < 16; ++c) CHECK(ds.at(r + 3, c + 5) == da.at(r, c));
}

TEST_CASE("two passes with K equal one pass with K dilated by K on the interior",
          "[morphology]") {
  const Image8 img = random_image(20, 20, 43);
  const Image8 twice = dilate(img, {3, 3}, 2);
  const Image8 once = dilate(img, {5, 5}, 1);  // rect(3) (+) rect(3) = rect(5)
  for (int r = 4; r < 16; ++r)
    for (int c = 4; c < 16; ++c) CHECK(twice.at(r, c) == once.at(r, c));
}

TEST_CASE("dilation introduces no new intensity values", "[morphology]") {
  const Image8 img = random_image(16, 16, 44);
  std::set<int> input_values;
  for (auto v : img.data()) input_values.insert(v);
  const Image8 out = dilate(img, {5, 5}, 2);
  for (auto v : out.data()) CHECK(input_values.count(v) == 1);
}

TEST_CASE("dilation parameter validation", "[morphology]") {
  const Image8 img(4, 4, 1);
  CHECK_THROWS_AS(dilate(img, {2, 3}), Error);
  CHECK_THROWS_AS(dilate(img, {3, 0}), Error);
  CHECK_THROWS_AS(dilate(img, {3, 3}, 0), Error);
}

TEST_CASE("max-intensity threshold marks exactly the top band", "[morphology]") {
  SECTION("unique maximum with zero delta") {
    Image8 img(5, 5, 10);
    img.at(2, 3) = 240;
    const MaxIntensityResult res = max_intensity_threshold(img, 0);
    CHECK(res.threshold == 240);
    int marked = 0;
    for (auto v : res.mask.data()) marked += (v == 255);
    CHECK(marked == 1);
    CHECK(res.mask.at(2, 3) == 255);
  }
  SECTION("two-plane image: only the near plane is marked") {
    Image8 img(6, 6, 0);
    for (int c = 0; c < 6; ++c) {
      img.at(1, c) = 200;  // near plane
      img.at(4, c) = 90;   // far plane
    }
    const MaxIntensityResult res = max_intensity_threshold(img, 8);
    CHECK(res.threshold == 192);
    for (int c = 0; c < 6; ++c) {
      CHECK(res.mask.at(1, c) == 255);
      CHECK(res.mask.at(4, c) == 0);
    }
  }
  SECTION("invalid zeros are never marked even with a huge delta") {
    Image8 img(3, 3, 0);
    img.at(1, 1) = 5;
    const MaxIntensityResult res = max_intensity_threshold(img, 200);
    int marked = 0;
    for (auto v : res.mask.data()) marked += (v == 255);
    CHECK(marked == 1);
  }
  SECTION("all-zero image is an error") {
    CHECK_THROWS_AS(max_intensity_threshold(Image8(4, 4, 0), 8), EmptyDisparity);
  }
}
