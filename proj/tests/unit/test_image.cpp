#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include "fusedim/image.hpp"
#include "fusedim/image_io.hpp"

using namespace fusedim;

namespace {

Image8 random_image(int rows, int cols, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  Image8 img(rows, cols);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(dist(rng));
  return img;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("remap with identity map preserves every pixel", "[image]") {
  const Image8 img = random_image(17, 23, 1);
  const Image8 out = remap_image(img, RemapGrid::identity(17, 23));
  CHECK(out == img);
}

TEST_CASE("remap integer translation shifts and zero-fills", "[image]") {
  const Image8 img = random_image(8, 10, 2);
  RemapGrid map(8, 10);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 10; ++c) {
      map.src_x[r * 10 + c] = static_cast<float>(c - 1);  // shift right by one
      map.src_y[r * 10 + c] = static_cast<float>(r);
    }
  const Image8 out = remap_image(img, map);
  for (int r = 0; r < 8; ++r) {
    CHECK(out.at(r, 0) == 0);
    for (int c = 1; c < 10; ++c) CHECK(out.at(r, c) == img.at(r, c - 1));
  }
}

TEST_CASE("remap matches a scalar bilinear oracle on sampled pixels", "[image]") {
  const Image8 img = random_image(32, 32, 3);
  RemapGrid map(32, 32);
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> jitter(-2.5f, 2.5f);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      map.src_x[r * 32 + c] = c + jitter(rng);
      map.src_y[r * 32 + c] = r + jitter(rng);
    }
  const Image8 out = remap_image(img, map);

  std::uniform_int_distribution<int> pick(0, 31);
  for (int i = 0; i < 100; ++i) {
    const int r = pick(rng), c = pick(rng);
    const double x = map.src_x[r * 32 + c], y = map.src_y[r * 32 + c];
    // independent scalar evaluation
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    auto tap = [&](int rr, int cc) {
      return img.in_bounds(rr, cc) ? double(img.at(rr, cc)) : 0.0;
    };
    const double expect = tap(y0, x0) * (1 - fx) * (1 - fy) + tap(y0, x0 + 1) * fx * (1 - fy) +
                          tap(y0 + 1, x0) * (1 - fx) * fy + tap(y0 + 1, x0 + 1) * fx * fy;
    CHECK(int(out.at(r, c)) == int(std::llround(expect)));
  }
}

TEST_CASE("pgm 8-bit round trip", "[image][io]") {
  const Image8 img = random_image(11, 13, 5);
  const auto path = temp_file("fusedim_test8.pgm");
  save_pgm(path, img);
  CHECK(load_pgm8(path) == img);
  CHECK(pgm_maxval(path) == 255);
}

TEST_CASE("pgm 16-bit round trip and big-endian layout", "[image][io]") {
  Image16 img(2, 2);
  img.at(0, 0) = 0x1234;
  img.at(0, 1) = 0;
  img.at(1, 0) = 65535;
  img.at(1, 1) = 7;
  const auto path = temp_file("fusedim_test16.pgm");
  save_pgm(path, img);
  CHECK(load_pgm16(path) == img);
  CHECK(pgm_maxval(path) == 65535);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t raster = bytes.size() - 8;  // 4 samples * 2 bytes
  CHECK(static_cast<unsigned char>(bytes[raster]) == 0x12);      // high byte first
  CHECK(static_cast<unsigned char>(bytes[raster + 1]) == 0x34);
}

TEST_CASE("ppm loads as integer luma", "[image][io]") {
  const auto path = temp_file("fusedim_test.ppm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n2 1\n255\n";
    const unsigned char px[6] = {255, 0, 0, 10, 20, 30};
    out.write(reinterpret_cast<const char*>(px), 6);
  }
  const Image8 img = load_ppm_luma(path);
  CHECK(int(img.at(0, 0)) == (299 * 255) / 1000);
  CHECK(int(img.at(0, 1)) == (299 * 10 + 587 * 20 + 114 * 30) / 1000);
}

TEST_CASE("pgm header comments are tolerated", "[image][io]") {
  const auto path = temp_file("fusedim_comment.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment\n2 1\n# another\n255\n";
    const unsigned char px[2] = {9, 200};
    out.write(reinterpret_cast<const char*>(px), 2);
  }
  const Image8 img = load_pgm8(path);
  CHECK(int(img.at(0, 1)) == 200);
}
