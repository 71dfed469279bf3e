#pragma once

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "fusedim/canny.hpp"
#include "fusedim/error.hpp"
#include "fusedim/image.hpp"
#include "fusedim/morphology.hpp"

namespace fusedim {

/// The ground-offset constant and pixel scale are calibration values valid
/// only at a fixed capture geometry; the geometry fields are echoed with
/// every result so a report is interpretable on its own.
struct HeightConfig {
  double ground_offset_px = 53;
  double cm_per_px = 0.116;
  double camera_height_cm = 8.5;
  double working_distance_m = 0.70;

  void validate() const {
    if (ground_offset_px < 0) throw Error("height config: ground_offset_px must be >= 0");
    if (!(cm_per_px > 0)) throw Error("height config: cm_per_px must be > 0");
  }
};

struct HeightReport {
  double height_cm = 0;
  double height_px = 0;
  int top_row = 0;
  int threshold = 0;
  bool degenerate = false;  // set when the raw pixel height was <= 0
  std::string method;       // "max-intensity" or "canny-rect"
  HeightConfig geometry;

  nlohmann::json to_json() const {
    return {{"height_cm", height_cm},
            {"height_px", height_px},
            {"r_top", top_row},
            {"threshold", threshold},
            {"degenerate", degenerate},
            {"method", method},
            {"geometry",
             {{"ground_offset_px", geometry.ground_offset_px},
              {"cm_per_px", geometry.cm_per_px},
              {"camera_height_cm", geometry.camera_height_cm},
              {"working_distance_m", geometry.working_distance_m}}}};
  }

  static HeightReport from_json(const nlohmann::json& j) {
    HeightReport r;
    r.height_cm = j.at("height_cm").get<double>();
    r.height_px = j.at("height_px").get<double>();
    r.top_row = j.at("r_top").get<int>();
    r.threshold = j.at("threshold").get<int>();
    r.degenerate = j.value("degenerate", false);
    r.method = j.at("method").get<std::string>();
    const auto& g = j.at("geometry");
    r.geometry.ground_offset_px = g.at("ground_offset_px").get<double>();
    r.geometry.cm_per_px = g.at("cm_per_px").get<double>();
    r.geometry.camera_height_cm = g.at("camera_height_cm").get<double>();
    r.geometry.working_distance_m = g.at("working_distance_m").get<double>();
    return r;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "height_cm: " << height_cm << "\n"
       << "height_px: " << height_px << "\n"
       << "r_top: " << top_row << "\n"
       << "threshold: " << threshold << "\n"
       << "degenerate: " << (degenerate ? "true" : "false") << "\n"
       << "method: " << method << "\n"
       << "ground_offset_px: " << geometry.ground_offset_px << "\n"
       << "cm_per_px: " << geometry.cm_per_px << "\n"
       << "camera_height_cm: " << geometry.camera_height_cm << "\n"
       << "working_distance_m: " << geometry.working_distance_m << "\n";
    return os.str();
  }
};

/// Row-wise max-intensity scan: the first row containing a pixel within
/// delta of the global maximum marks the object top; the object base sits
/// ground_offset_px above the image bottom at the calibrated geometry.
inline HeightReport height_from_disparity(const Image8& disp_img, const HeightConfig& cfg,
                                          int delta = 8) {
  cfg.validate();
  int max_v = 0;
  for (auto v : disp_img.data()) max_v = std::max(max_v, int(v));
  if (max_v == 0) throw EmptyDisparity("height_from_disparity: all pixels are zero");
  const int threshold = max_v - delta;

  int r_top = -1;
  for (int r = 0; r < disp_img.rows() && r_top < 0; ++r)
    for (int c = 0; c < disp_img.cols(); ++c)
      if (disp_img.at(r, c) > 0 && int(disp_img.at(r, c)) >= threshold) {
        r_top = r;
        break;
      }

  HeightReport rep;
  rep.method = "max-intensity";
  rep.geometry = cfg;
  rep.top_row = r_top;
  rep.threshold = threshold;
  const double raw_px = (disp_img.rows() - r_top) - cfg.ground_offset_px;
  rep.degenerate = raw_px <= 0;
  rep.height_px = std::max(raw_px, 0.0);
  rep.height_cm = rep.height_px * cfg.cm_per_px;
  return rep;
}

/// Diagnostic alternative: Canny edges, bounding rectangle, rectangle height
/// in pixels times the scale. Kept because it drifts between captures of the
/// same object, which is what motivated the max-intensity method.
inline HeightReport height_from_canny_rect(const Image8& disp_img, const HeightConfig& cfg,
                                           const EdgeParams& edge_params = {}) {
  cfg.validate();
  const Image8 edges = canny_edges(disp_img, edge_params);
  const PixelRect rect = bounding_rect(edges);
  HeightReport rep;
  rep.method = "canny-rect";
  rep.geometry = cfg;
  rep.top_row = rect.row0;
  rep.threshold = 0;
  rep.height_px = rect.rows;
  rep.height_cm = rect.rows * cfg.cm_per_px;
  rep.degenerate = false;
  return rep;
}

/// cm-per-pixel from a reference span of known physical size.
inline double pixel_scale_from_reference(double span_px, double span_cm) {
  if (!(span_px > 0) || !(span_cm > 0))
    throw NonPositiveSpan("pixel_scale_from_reference: spans must be > 0");
  return span_cm / span_px;
}

}  // namespace fusedim
