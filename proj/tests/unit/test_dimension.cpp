#include <catch2/catch_amalgamated.hpp>

#include "fusedim/dimension.hpp"

using namespace fusedim;

namespace {

// 480-row disparity image whose max-intensity region starts at r_top
Image8 synthetic_cube_disparity(int r_top, std::uint8_t bright = 220, std::uint8_t dim = 100) {
  Image8 img(480, 640, 0);
  for (int r = 60; r < r_top; ++r)
    for (int c = 200; c < 440; ++c) img.at(r, c) = dim;  // far background band
  for (int r = r_top; r < 480; ++r)
    for (int c = 200; c < 440; ++c) img.at(r, c) = bright;
  return img;
}

}  // namespace

TEST_CASE("height matches the reference-cube arithmetic", "[dimension]") {
  // top row 168, offset 53, scale 0.116: (480 - 168 - 53) * 0.116 = 30.044
  const Image8 img = synthetic_cube_disparity(168);
  const HeightReport rep = height_from_disparity(img, HeightConfig{}, 8);
  CHECK(rep.top_row == 168);
  CHECK(rep.height_px == 259);
  CHECK(rep.height_cm == Catch::Approx(30.044).margin(1e-9));
  CHECK(rep.threshold == 212);
  CHECK_FALSE(rep.degenerate);
  CHECK(rep.method == "max-intensity");
}

TEST_CASE("a bright region touching row zero spans the full frame", "[dimension]") {
  Image8 img(100, 50, 0);
  for (int r = 0; r < 100; ++r) img.at(r, 25) = 255;
  HeightConfig cfg;
  cfg.ground_offset_px = 0;
  cfg.cm_per_px = 0.2;
  const HeightReport rep = height_from_disparity(img, cfg, 8);
  CHECK(rep.top_row == 0);
  CHECK(rep.height_cm == Catch::Approx(100 * 0.2));
}

TEST_CASE("max region below the ground offset degenerates to zero height", "[dimension]") {
  Image8 img(100, 50, 0);
  for (int r = 60; r < 100; ++r) img.at(r, 10) = 200;
  HeightConfig cfg;
  cfg.ground_offset_px = 50;
  const HeightReport rep = height_from_disparity(img, cfg, 8);
  CHECK(rep.degenerate);
  CHECK(rep.height_px == 0);
  CHECK(rep.height_cm == 0);
}

TEST_CASE("all-zero disparity image is an error", "[dimension]") {
  CHECK_THROWS_AS(height_from_disparity(Image8(10, 10, 0), HeightConfig{}, 8), EmptyDisparity);
}

TEST_CASE("height is invariant to monotone remaps that keep max membership", "[dimension]") {
  const Image8 img = synthetic_cube_disparity(168);
  Image8 remapped = img;
  for (auto& v : remapped.data())
    if (v > 0) v = static_cast<std::uint8_t>(v / 2 + 100);  // strictly monotone on [1,255]
  const HeightReport a = height_from_disparity(img, HeightConfig{}, 8);
  const HeightReport b = height_from_disparity(remapped, HeightConfig{}, 4);  // half the delta
  CHECK(a.top_row == b.top_row);
  CHECK(a.height_cm == b.height_cm);
}

TEST_CASE("each row of r_top costs exactly one pixel scale of height", "[dimension]") {
  const HeightReport a = height_from_disparity(synthetic_cube_disparity(168), HeightConfig{}, 8);
  const HeightReport b = height_from_disparity(synthetic_cube_disparity(169), HeightConfig{}, 8);
  CHECK(a.height_cm - b.height_cm == Catch::Approx(0.116).margin(1e-12));
}

TEST_CASE("canny-rect diagnostic height uses the bounding rectangle", "[dimension]") {
  Image8 img(120, 120, 0);
  for (int r = 30; r < 90; ++r)
    for (int c = 40; c < 80; ++c) img.at(r, c) = 230;
  HeightConfig cfg;
  cfg.cm_per_px = 0.5;
  const HeightReport rep = height_from_canny_rect(img, cfg);
  CHECK(rep.method == "canny-rect");
  CHECK(std::abs(rep.height_px - 60) <= 2);  // rect rows within the 1 px/side budget
  CHECK(rep.height_cm == Catch::Approx(rep.height_px * 0.5));
}

TEST_CASE("pixel scale from reference span", "[dimension]") {
  // 362 px spanning 42 cm: 0.116 cm/px to three decimals
  const double scale = pixel_scale_from_reference(362, 42);
  CHECK(scale == Catch::Approx(0.116).margin(0.0005));
  CHECK(pixel_scale_from_reference(100, 100) == 1.0);
  CHECK_THROWS_AS(pixel_scale_from_reference(0, 42), NonPositiveSpan);
  CHECK_THROWS_AS(pixel_scale_from_reference(362, -1), NonPositiveSpan);
}

TEST_CASE("pixel scale is homogeneous of degree zero", "[dimension]") {
  for (double k : {0.5, 2.0, 7.25, 100.0})
    CHECK(pixel_scale_from_reference(362 * k, 42 * k) ==
          Catch::Approx(pixel_scale_from_reference(362, 42)).epsilon(1e-12));
}

TEST_CASE("height report serializes with the normative keys", "[dimension]") {
  const HeightReport rep = height_from_disparity(synthetic_cube_disparity(168), HeightConfig{}, 8);
  const nlohmann::json j = rep.to_json();
  CHECK(j.at("height_cm").get<double>() == Catch::Approx(30.044));
  CHECK(j.at("r_top").get<int>() == 168);
  CHECK(j.at("method").get<std::string>() == "max-intensity");
  CHECK(j.at("geometry").at("cm_per_px").get<double>() == 0.116);
  const HeightReport back = HeightReport::from_json(j);
  CHECK(back.height_cm == rep.height_cm);
  CHECK(back.top_row == rep.top_row);

  const std::string text = rep.to_text();
  CHECK(text.find("height_cm: 30.044") != std::string::npos);
  CHECK(text.find("r_top: 168") != std::string::npos);
}

TEST_CASE("height config validation", "[dimension]") {
  HeightConfig cfg;
  cfg.cm_per_px = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = HeightConfig{};
  cfg.ground_offset_px = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
