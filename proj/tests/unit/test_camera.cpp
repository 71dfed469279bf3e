#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fusedim/calibration.hpp"
#include "fusedim/camera.hpp"

using namespace fusedim;

namespace {

DistortionCoefficients camera_l_dist() {
  const std::array<double, 5> v{0.0644, -0.2494, -0.6359, 6.9078e-4, -0.0011};
  return DistortionCoefficients::from_values(v);
}

}  // namespace

TEST_CASE("optical axis maps to the principal point", "[camera]") {
  const CameraIntrinsics k{500, 510, 320, 240};
  const PixelPoint p = project({0, 0, 1000}, RigidTransform::identity(), k, {});
  CHECK(p.u == Catch::Approx(320).margin(1e-12));
  CHECK(p.v == Catch::Approx(240).margin(1e-12));
}

TEST_CASE("projection matches a hand evaluation with Table-style intrinsics", "[camera]") {
  // (100, 0, 1000) with fx = 729.9077, cx = 322.5457:
  // u = 322.5457 + 0.1 * 729.9077 = 395.53647
  const CameraIntrinsics k{729.9077, 729.4782, 322.5457, 226.0965};
  const PixelPoint p = project({100, 0, 1000}, RigidTransform::identity(), k, {});
  CHECK(p.u == Catch::Approx(395.53647).margin(1e-5));
  CHECK(p.v == Catch::Approx(226.0965).margin(1e-9));
}

TEST_CASE("points behind the camera are rejected", "[camera]") {
  const CameraIntrinsics k{500, 500, 320, 240};
  CHECK_THROWS_AS(project({0, 0, -1}, RigidTransform::identity(), k, {}), BehindCamera);
  CHECK_THROWS_AS(project({0, 0, 0}, RigidTransform::identity(), k, {}), BehindCamera);
}

TEST_CASE("projection is scale-invariant along the ray", "[camera]") {
  const CameraIntrinsics k{600, 620, 310, 250};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coord(-300, 300), depth(400, 3000), scale(0.1, 10);
  for (int i = 0; i < 200; ++i) {
    const double x = coord(rng), y = coord(rng), z = depth(rng), s = scale(rng);
    const PixelPoint a = project({x, y, z}, RigidTransform::identity(), k, {});
    const PixelPoint b = project({s * x, s * y, s * z}, RigidTransform::identity(), k, {});
    CHECK(a.u == Catch::Approx(b.u).margin(1e-9));
    CHECK(a.v == Catch::Approx(b.v).margin(1e-9));
  }
}

TEST_CASE("distort is the identity for zero coefficients", "[camera]") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> c(-0.8, 0.8);
  for (int i = 0; i < 100; ++i) {
    const NormalizedPoint p{c(rng), c(rng)};
    const NormalizedPoint q = distort(p, {});
    CHECK(q.x == p.x);
    CHECK(q.y == p.y);
  }
}

TEST_CASE("distort fixes the origin for any coefficient set", "[camera]") {
  const NormalizedPoint q = distort({0, 0}, camera_l_dist());
  CHECK(q.x == 0);
  CHECK(q.y == 0);
}

TEST_CASE("distort matches the frozen scalar-evaluation oracle", "[camera]") {
  // independent scalar evaluation of the rational + tangential model at
  // (0.1, 0.05) with the Camera L coefficients
  const NormalizedPoint q = distort({0.1, 0.05}, camera_l_dist());
  CHECK(q.x == Catch::Approx(0.10004763672578125).margin(1e-15));
  CHECK(q.y == Catch::Approx(0.050039328112890628).margin(1e-15));
}

TEST_CASE("undistort is identity with zero coefficients", "[camera]") {
  const NormalizedPoint q = undistort({0.3, -0.2}, {});
  CHECK(q.x == Catch::Approx(0.3).margin(1e-12));
  CHECK(q.y == Catch::Approx(-0.2).margin(1e-12));
}

TEST_CASE("undistort round trip over the working domain", "[camera]") {
  const std::array<double, 5> vr{-0.0101, 0.3192, -2.2780, -0.0048, -0.0035};
  const DistortionCoefficients sets[] = {camera_l_dist(),
                                         DistortionCoefficients::from_values(vr)};
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> c(-1, 1);
  for (const auto& d : sets) {
    int tested = 0;
    while (tested < 1000) {
      NormalizedPoint p{c(rng), c(rng)};
      if (p.x * p.x + p.y * p.y > 0.25) continue;  // |p| <= 0.5
      ++tested;
      const NormalizedPoint q = undistort(distort(p, d), d);
      CHECK(std::abs(q.x - p.x) < 1e-9);
      CHECK(std::abs(q.y - p.y) < 1e-9);
    }
  }
}

TEST_CASE("undistort round trip with random small coefficient sets", "[camera]") {
  std::mt19937 rng(14);
  std::uniform_real_distribution<double> kc(-0.2, 0.2), pc(-0.01, 0.01), c(-0.5, 0.5);
  for (int s = 0; s < 20; ++s) {
    DistortionCoefficients d;
    d.k1 = kc(rng);
    d.k2 = kc(rng) * 0.3;
    d.k3 = kc(rng) * 0.1;
    d.p1 = pc(rng);
    d.p2 = pc(rng);
    for (int i = 0; i < 50; ++i) {
      NormalizedPoint p{c(rng) * 0.7, c(rng) * 0.7};
      const NormalizedPoint q = undistort(distort(p, d), d);
      CHECK(std::abs(q.x - p.x) < 1e-9);
      CHECK(std::abs(q.y - p.y) < 1e-9);
    }
  }
}

TEST_CASE("degenerate rational denominator is reported", "[camera]") {
  // k4 chosen so 1 + k4 r^2 vanishes inside the working domain
  DistortionCoefficients d;
  d.k4 = -2.0;
  CHECK_THROWS_AS(d.validate(), DenominatorNonPositive);
  CHECK_THROWS_AS(distort({1.0, 0.0}, d), DenominatorNonPositive);
  bool threw = false;
  try {
    undistort({0.9, 0.0}, d);
  } catch (const DenominatorNonPositive&) {
    threw = true;
  } catch (const NoConvergence&) {
    threw = true;
  }
  CHECK(threw);
}

TEST_CASE("intrinsics invariants", "[camera]") {
  CHECK_THROWS_AS((CameraIntrinsics{0, 500, 10, 10}.validate()), Error);
  CHECK_THROWS_AS((CameraIntrinsics{500, -1, 10, 10}.validate()), Error);
  CHECK(check_principal_point({500, 500, 320, 240}, 480, 640) == std::nullopt);
  CHECK(check_principal_point({500, 500, 700, 240}, 480, 640).has_value());
}
