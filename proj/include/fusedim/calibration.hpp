#pragma once

#include <filesystem>

#include "fusedim/camera.hpp"
#include "fusedim/keyvalue.hpp"
#include "fusedim/stereo.hpp"

namespace fusedim {

// Calibration file layout (shared key-value dialect):
//
//   [left]
//   fx 729.9077
//   fy 729.4782
//   cx 322.5457
//   cy 226.0965
//   dist 0.0644 -0.2494 -0.6359 6.9078e-4 -0.0011
//   [right]
//   ...
//   [stereo]
//   R 1.0 0.0 0.0  0.0 1.0 0.0  0.0 0.0 1.0   # row-major
//   t -93.1032 1.2802 0.1104                  # mm
//
// `dist` takes 3 (k1 k2 k3), 5 (+ p1 p2) or 8 (+ k4 k5 k6) values.

inline StereoCamera parse_camera_section(const KeyValueFile& kv, const std::string& section) {
  StereoCamera cam;
  cam.intr.fx = kv.require_number(section, "fx");
  cam.intr.fy = kv.require_number(section, "fy");
  cam.intr.cx = kv.require_number(section, "cx");
  cam.intr.cy = kv.require_number(section, "cy");
  cam.intr.validate();
  const auto dist = kv.numbers(section, "dist");
  const double r_max = kv.number(section, "r_max", 2.0);
  cam.dist = DistortionCoefficients::from_values(dist, r_max * r_max);
  return cam;
}

inline StereoRig parse_stereo_rig(const KeyValueFile& kv) {
  StereoRig rig;
  rig.left = parse_camera_section(kv, "left");
  rig.right = parse_camera_section(kv, "right");
  const auto r = kv.numbers("stereo", "R");
  if (r.size() != 9)
    throw ConfigError(kv.origin() + ": [stereo] R must hold 9 row-major values");
  const auto t = kv.numbers("stereo", "t");
  if (t.size() != 3) throw ConfigError(kv.origin() + ": [stereo] t must hold 3 values (mm)");
  rig.R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  rig.t << t[0], t[1], t[2];
  rig.validate();
  return rig;
}

inline StereoRig load_calibration(const std::filesystem::path& path) {
  return parse_stereo_rig(KeyValueFile::parse_file(path));
}

/// The rig printed in the reference calibration report; used as a golden
/// fixture by the tests and as the bundled sample calibration.
inline StereoRig reference_rig() {
  StereoRig rig;
  rig.left.intr = {729.9077, 729.4782, 322.5457, 226.0965};
  rig.left.dist =
      DistortionCoefficients::from_values(std::array{0.0644, -0.2494, -0.6359, 6.9078e-4, -0.0011});
  rig.right.intr = {733.1340, 732.8580, 303.3310, 224.2269};
  rig.right.dist =
      DistortionCoefficients::from_values(std::array{-0.0101, 0.3192, -2.2780, -0.0048, -0.0035});
  rig.R << 1.0000, 0.0027, -0.0036,
          -0.0027, 1.0000, 0.0016,
           0.0036, -0.0016, 1.0000;
  rig.t << -93.1032, 1.2802, 0.1104;
  return rig;
}

}  // namespace fusedim
