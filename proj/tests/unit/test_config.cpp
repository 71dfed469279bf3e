#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "fusedim/calibration.hpp"
#include "fusedim/keyvalue.hpp"
#include "fusedim/scene.hpp"

using namespace fusedim;

TEST_CASE("key-value dialect: sections, comments, repeated keys", "[config]") {
  std::istringstream in(
      "top 1\n"
      "# full-line comment\n"
      "[alpha]\n"
      "x 2.5 3.5   # trailing comment\n"
      "x 4.5\n"
      "name hello\n"
      "\n"
      "[beta]\n"
      "flagged true\n");
  const KeyValueFile kv = KeyValueFile::parse(in, "test");
  CHECK(kv.number("", "top", -1) == 1);
  CHECK(kv.number("alpha", "x", -1) == 2.5);
  CHECK(kv.numbers("alpha", "x") == std::vector<double>{2.5, 3.5});
  CHECK(kv.find_all("alpha", "x").size() == 2);
  CHECK(kv.text("alpha", "name") == "hello");
  CHECK(kv.flag("beta", "flagged", false));
  CHECK(kv.number("beta", "absent", 7) == 7);
  CHECK_THROWS_AS(kv.require_number("beta", "absent"), ConfigError);
}

TEST_CASE("key-value dialect rejects malformed numbers", "[config]") {
  std::istringstream in("[a]\nx 1.2.3\n");
  const KeyValueFile kv = KeyValueFile::parse(in, "test");
  CHECK_THROWS_AS(kv.require_number("a", "x"), ConfigError);
}

TEST_CASE("calibration file parses the reference rig", "[config][calibration]") {
  std::istringstream in(
      "# reference calibration\n"
      "[left]\n"
      "fx 729.9077\n"
      "fy 729.4782\n"
      "cx 322.5457\n"
      "cy 226.0965\n"
      "dist 0.0644 -0.2494 -0.6359 6.9078e-4 -0.0011\n"
      "[right]\n"
      "fx 733.1340\n"
      "fy 732.8580\n"
      "cx 303.3310\n"
      "cy 224.2269\n"
      "dist -0.0101 0.3192 -2.2780 -0.0048 -0.0035\n"
      "[stereo]\n"
      "R 1.0000 0.0027 -0.0036 -0.0027 1.0000 0.0016 0.0036 -0.0016 1.0000\n"
      "t -93.1032 1.2802 0.1104\n");
  const StereoRig rig = parse_stereo_rig(KeyValueFile::parse(in, "test"));
  const StereoRig ref = reference_rig();
  CHECK(rig.left.intr.fx == ref.left.intr.fx);
  CHECK(rig.left.dist.k3 == ref.left.dist.k3);
  CHECK(rig.left.dist.p2 == ref.left.dist.p2);
  CHECK(rig.right.intr.cy == ref.right.intr.cy);
  CHECK(rig.R == ref.R);
  CHECK(rig.t == ref.t);
  CHECK(rig.baseline() == Catch::Approx(93.112067).margin(1e-4));
}

TEST_CASE("distortion coefficient counts: 3, 5, 8 accepted, others rejected", "[config]") {
  const std::array<double, 3> three{0.1, -0.05, 0.01};
  const auto d3 = DistortionCoefficients::from_values(three);
  CHECK(d3.p1 == 0);
  CHECK(d3.k4 == 0);

  const std::array<double, 8> eight{0.1, -0.05, 0.01, 1e-4, -1e-4, 0.02, -0.01, 0.001};
  const auto d8 = DistortionCoefficients::from_values(eight);
  CHECK(d8.k6 == 0.001);

  const std::array<double, 4> four{0.1, -0.05, 0.01, 1e-4};
  CHECK_THROWS_AS(DistortionCoefficients::from_values(four), ConfigError);
  const std::array<double, 9> nine{};
  CHECK_THROWS_AS(DistortionCoefficients::from_values(nine), ConfigError);
}

TEST_CASE("scene config applies overrides over the default scene", "[config][scene]") {
  std::istringstream in(
      "[scene]\n"
      "seed 42\n"
      "ambient 0.5\n"
      "[camera]\n"
      "height_mm 120\n"
      "cy 240\n"
      "[objects]\n"
      "cuboid 1000 50 100 200 200 200 3\n"
      "cuboid 2000 -400 150 300 300 300\n"
      "[lrf]\n"
      "theta_deg 90\n"
      "[room]\n"
      "width_mm 4000\n"
      "depth_mm 4000\n");
  const SceneSpec s = SceneSpec::from_config(KeyValueFile::parse(in, "test"));
  CHECK(s.seed == 42);
  CHECK(s.ambient == 0.5);
  CHECK(s.camera_height_mm == 120);
  CHECK(s.rig.left.intr.cy == 240);
  REQUIRE(s.objects.size() == 2);
  CHECK(s.objects[0].size.x() == 200);
  CHECK(s.objects[1].texture_seed == 11);  // default seed when omitted
  CHECK(s.lrf_pose.theta_rad == Catch::Approx(std::numbers::pi / 2));
  CHECK(s.room.enabled);
  CHECK(s.room.width_mm == 4000);

  const SceneSpec def = SceneSpec::paper_default();
  CHECK(def.room.enabled);  // the reference scene is indoors
  CHECK(def.room.width_mm == 6400);
  REQUIRE(def.objects.size() == 1);
  CHECK(def.objects[0].size == Eigen::Vector3d(300, 300, 300));
  CHECK(def.rig.baseline() == Catch::Approx(93.1));
}
