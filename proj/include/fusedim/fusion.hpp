#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "fusedim/calibration.hpp"
#include "fusedim/detail.hpp"
#include "fusedim/dimension.hpp"
#include "fusedim/error.hpp"
#include "fusedim/footprint.hpp"
#include "fusedim/image_io.hpp"
#include "fusedim/lrf.hpp"
#include "fusedim/morphology.hpp"
#include "fusedim/plot.hpp"
#include "fusedim/scene.hpp"
#include "fusedim/sgm.hpp"
#include "fusedim/stereo.hpp"

namespace fusedim {

struct ObjectQuality {
  int lrf_support = 0;
  double disparity_valid_fraction = 0;
};

/// Fused output: LRF footprint (X-Y) plus stereo height (Z).
struct ObjectRecord {
  Footprint footprint;
  std::optional<double> height_cm;  // empty = UNKNOWN
  std::string lrf_sweep_id;
  std::string stereo_frame_id;
  ObjectQuality quality;
};

struct MapMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  SensorPose camera_pose, lrf_pose;
  std::optional<std::string> timestamp;  // config-supplied; never wall-clock
  double disparity_valid_fraction = 0;
  std::vector<double> unattached_heights_cm;
  nlohmann::json stage_params = nlohmann::json::object();
};

struct EnvironmentMap {
  std::vector<ObjectRecord> objects;
  std::vector<Point2> points;  // gated free-space returns
  MapMeta meta;
};

struct FuseResult {
  std::vector<ObjectRecord> objects;
  std::vector<double> unattached_heights_cm;
};

/// Attaches the stereo height to the footprint whose centre lies nearest the
/// camera's optical axis, within association_radius_mm and in front of the
/// camera. Everything else passes through unchanged: no footprint or height
/// is invented, only paired.
inline FuseResult fuse(const std::vector<Footprint>& footprints,
                       const std::optional<HeightReport>& height,
                       double association_radius_mm = 300,
                       const SensorPose& camera_pose = {}) {
  FuseResult res;
  res.objects.reserve(footprints.size());
  for (const auto& fp : footprints) {
    ObjectRecord rec;
    rec.footprint = fp;
    rec.quality.lrf_support = fp.support_count;
    res.objects.push_back(std::move(rec));
  }
  if (!height) return res;

  const double ax = std::cos(camera_pose.theta_rad);
  const double ay = std::sin(camera_pose.theta_rad);
  int best = -1;
  double best_off = association_radius_mm;
  for (std::size_t i = 0; i < footprints.size(); ++i) {
    const double rx = footprints[i].center.x - camera_pose.x;
    const double ry = footprints[i].center.y - camera_pose.y;
    if (rx * ax + ry * ay <= 0) continue;  // behind the camera
    const double off = std::abs(rx * ay - ry * ax);
    if (off <= best_off) {
      best_off = off;
      best = static_cast<int>(i);
    }
  }
  if (best >= 0)
    res.objects[static_cast<std::size_t>(best)].height_cm = height->height_cm;
  else
    res.unattached_heights_cm.push_back(height->height_cm);
  return res;
}

// ---------------------------------------------------------------------------
// JSON map form. Normative keys:
// {"objects":[{"center_mm":[x,y],"length_mm":L,"width_mm":W,"yaw_rad":a,
//   "height_cm":h|null,"quality":{...}}],"points_mm":[[x,y],...],"meta":{...}}

inline nlohmann::json map_to_json(const EnvironmentMap& map) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& rec : map.objects) {
    nlohmann::json o{
        {"center_mm", {rec.footprint.center.x, rec.footprint.center.y}},
        {"length_mm", rec.footprint.length_mm},
        {"width_mm", rec.footprint.width_mm},
        {"yaw_rad", rec.footprint.yaw_rad},
        {"quality",
         {{"lrf_support", rec.quality.lrf_support},
          {"disparity_valid_fraction", rec.quality.disparity_valid_fraction}}},
        {"sources", {{"lrf_sweep_id", rec.lrf_sweep_id}, {"stereo_frame_id", rec.stereo_frame_id}}},
    };
    o["height_cm"] = rec.height_cm ? nlohmann::json(*rec.height_cm) : nlohmann::json(nullptr);
    objects.push_back(std::move(o));
  }
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : map.points) points.push_back({p.x, p.y});

  nlohmann::json meta{
      {"config_hash", map.meta.config_hash},
      {"seed", map.meta.seed},
      {"sensor_poses",
       {{"camera", {map.meta.camera_pose.x, map.meta.camera_pose.y, map.meta.camera_pose.theta_rad}},
        {"lrf", {map.meta.lrf_pose.x, map.meta.lrf_pose.y, map.meta.lrf_pose.theta_rad}}}},
      {"disparity_valid_fraction", map.meta.disparity_valid_fraction},
      {"unattached_heights_cm", map.meta.unattached_heights_cm},
      {"stage_params", map.meta.stage_params},
  };
  meta["timestamp"] = map.meta.timestamp ? nlohmann::json(*map.meta.timestamp)
                                         : nlohmann::json(nullptr);
  return {{"objects", std::move(objects)}, {"points_mm", std::move(points)},
          {"meta", std::move(meta)}};
}

inline EnvironmentMap map_from_json(const nlohmann::json& j) {
  EnvironmentMap map;
  for (const auto& o : j.at("objects")) {
    ObjectRecord rec;
    rec.footprint.center = {o.at("center_mm")[0].get<double>(), o.at("center_mm")[1].get<double>()};
    rec.footprint.length_mm = o.at("length_mm").get<double>();
    rec.footprint.width_mm = o.at("width_mm").get<double>();
    rec.footprint.yaw_rad = o.at("yaw_rad").get<double>();
    rec.footprint.support_count = o.at("quality").at("lrf_support").get<int>();
    rec.quality.lrf_support = rec.footprint.support_count;
    rec.quality.disparity_valid_fraction =
        o.at("quality").at("disparity_valid_fraction").get<double>();
    if (o.contains("sources")) {
      rec.lrf_sweep_id = o.at("sources").value("lrf_sweep_id", "");
      rec.stereo_frame_id = o.at("sources").value("stereo_frame_id", "");
    }
    if (!o.at("height_cm").is_null()) rec.height_cm = o.at("height_cm").get<double>();
    map.objects.push_back(std::move(rec));
  }
  for (const auto& p : j.at("points_mm"))
    map.points.push_back({p[0].get<double>(), p[1].get<double>()});
  const auto& meta = j.at("meta");
  map.meta.config_hash = meta.value("config_hash", "");
  map.meta.seed = meta.value("seed", std::uint64_t{0});
  if (meta.contains("sensor_poses")) {
    const auto& sp = meta.at("sensor_poses");
    map.meta.camera_pose = {sp.at("camera")[0].get<double>(), sp.at("camera")[1].get<double>(),
                            sp.at("camera")[2].get<double>()};
    map.meta.lrf_pose = {sp.at("lrf")[0].get<double>(), sp.at("lrf")[1].get<double>(),
                         sp.at("lrf")[2].get<double>()};
  }
  map.meta.disparity_valid_fraction = meta.value("disparity_valid_fraction", 0.0);
  if (meta.contains("unattached_heights_cm"))
    map.meta.unattached_heights_cm = meta.at("unattached_heights_cm").get<std::vector<double>>();
  if (meta.contains("stage_params")) map.meta.stage_params = meta.at("stage_params");
  if (meta.contains("timestamp") && !meta.at("timestamp").is_null())
    map.meta.timestamp = meta.at("timestamp").get<std::string>();
  return map;
}

inline void export_map_json(const std::filesystem::path& path, const EnvironmentMap& map) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << map_to_json(map).dump(2) << "\n";
  if (!out) throw IoFailure("write failed: " + path.string());
}

inline EnvironmentMap import_map_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure(path.string() + ": " + e.what());
  }
  return map_from_json(j);
}

/// Top-down raster plot: free-space points gray, footprints as outlined
/// rectangles with the height printed beside them; world +x points up,
/// origin at the canvas centre, 1 px = mm_per_px.
inline RgbImage render_map_plot(const EnvironmentMap& map, double mm_per_px = 10.0,
                                int size_px = 801) {
  RgbImage img(size_px, size_px, {16, 16, 20});
  const int mid = size_px / 2;
  auto to_px = [&](const Point2& p, int& r, int& c) {
    r = mid - static_cast<int>(std::lround(p.x / mm_per_px));
    c = mid - static_cast<int>(std::lround(p.y / mm_per_px));
  };

  // axes
  const Rgb axis{60, 60, 66};
  draw_line(img, mid, 0, mid, size_px - 1, axis);
  draw_line(img, 0, mid, size_px - 1, mid, axis);

  const Rgb outline{60, 200, 90};
  const Rgb label{240, 240, 240};
  for (const auto& rec : map.objects) {
    const auto& fp = rec.footprint;
    const double cy_ = std::cos(fp.yaw_rad), sy = std::sin(fp.yaw_rad);
    const double hl = fp.length_mm / 2, hw = fp.width_mm / 2;
    Point2 corners[4] = {
        {fp.center.x + hl * cy_ - hw * sy, fp.center.y + hl * sy + hw * cy_},
        {fp.center.x - hl * cy_ - hw * sy, fp.center.y - hl * sy + hw * cy_},
        {fp.center.x - hl * cy_ + hw * sy, fp.center.y - hl * sy - hw * cy_},
        {fp.center.x + hl * cy_ + hw * sy, fp.center.y + hl * sy - hw * cy_},
    };
    for (int i = 0; i < 4; ++i) {
      int r0, c0, r1, c1;
      to_px(corners[i], r0, c0);
      to_px(corners[(i + 1) % 4], r1, c1);
      draw_line(img, r0, c0, r1, c1, outline);
    }
    int tr, tc;
    to_px(fp.center, tr, tc);
    std::string text = "?";
    if (rec.height_cm) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1fcm", *rec.height_cm);
      text = buf;
    }
    draw_text(img, tr - 12, tc + 8, text, label);
  }

  const Rgb point{170, 170, 170};
  for (const auto& p : map.points) {
    int r, c;
    to_px(p, r, c);
    img.set(r, c, point);
  }
  return img;
}

inline void export_map_plot(const std::filesystem::path& path, const EnvironmentMap& map,
                            double mm_per_px = 10.0, int size_px = 801) {
  save_ppm(path, render_map_plot(map, mm_per_px, size_px));
}

// ---------------------------------------------------------------------------
// Pipeline orchestration

struct PipelineConfig {
  // inputs: either a synthetic scene or files
  bool synthetic = true;
  std::filesystem::path left_path, right_path, calibration_path, packets_path;
  SceneSpec scene = SceneSpec::paper_default();
  int rows = 480, cols = 640;

  MatcherParams sgm;
  bool dilate_enabled = true;
  StructuringElement kernel;
  int dilate_iterations = 1;
  HeightConfig height;
  int height_delta = 8;

  int lrf_realizations = 5;
  int min_realizations = 3;
  int range_gate_mm = 3000;
  LrfNoise lrf_noise{3.0, 0.02, 3000.0};
  FootprintParams footprint;
  double association_radius_mm = 300;
  SensorPose camera_pose{};
  double plot_mm_per_px = 10;
  int plot_size_px = 801;
  std::optional<std::string> timestamp;
  std::string config_text;  // raw config bytes, hashed into the map metadata

  static PipelineConfig from_config(const KeyValueFile& kv, std::string raw_text = "") {
    PipelineConfig c;
    c.config_text = std::move(raw_text);
    c.scene = SceneSpec::from_config(kv);

    const std::string mode = kv.text("inputs", "mode", "synthetic");
    if (mode == "synthetic") {
      c.synthetic = true;
    } else if (mode == "files") {
      c.synthetic = false;
      c.left_path = kv.text("inputs", "left");
      c.right_path = kv.text("inputs", "right");
      c.calibration_path = kv.text("inputs", "calibration");
      c.packets_path = kv.text("inputs", "packets");
    } else {
      throw ConfigError(kv.origin() + ": [inputs] mode must be 'synthetic' or 'files'");
    }
    c.rows = static_cast<int>(kv.number("inputs", "rows", c.rows));
    c.cols = static_cast<int>(kv.number("inputs", "cols", c.cols));

    const int block = static_cast<int>(kv.number("sgm", "block_size", c.sgm.block_size));
    c.sgm = MatcherParams::for_block(block);
    c.sgm.num_disparities =
        static_cast<int>(kv.number("sgm", "num_disparities", c.sgm.num_disparities));
    c.sgm.min_disparity = static_cast<int>(kv.number("sgm", "min_disparity", 0));
    c.sgm.penalty_small =
        static_cast<int>(kv.number("sgm", "penalty_small", c.sgm.penalty_small));
    c.sgm.penalty_large =
        static_cast<int>(kv.number("sgm", "penalty_large", c.sgm.penalty_large));
    c.sgm.paths = static_cast<int>(kv.number("sgm", "paths", c.sgm.paths));
    c.sgm.lr_threshold = kv.number("sgm", "lr_threshold", c.sgm.lr_threshold);
    c.sgm.uniqueness_ratio =
        static_cast<int>(kv.number("sgm", "uniqueness_ratio", c.sgm.uniqueness_ratio));
    c.sgm.validate();

    c.dilate_enabled = kv.flag("dilate", "enabled", c.dilate_enabled);
    const int k = static_cast<int>(kv.number("dilate", "kernel", 5));
    c.kernel = {k, k};
    c.dilate_iterations = static_cast<int>(kv.number("dilate", "iterations", 1));

    c.height.ground_offset_px =
        kv.number("height", "ground_offset_px", c.height.ground_offset_px);
    c.height.cm_per_px = kv.number("height", "cm_per_px", c.height.cm_per_px);
    c.height.camera_height_cm =
        kv.number("height", "camera_height_cm", c.height.camera_height_cm);
    c.height.working_distance_m =
        kv.number("height", "working_distance_m", c.height.working_distance_m);
    c.height_delta = static_cast<int>(kv.number("height", "delta", c.height_delta));

    c.lrf_realizations =
        static_cast<int>(kv.number("lrf", "realizations", c.lrf_realizations));
    c.min_realizations =
        static_cast<int>(kv.number("lrf", "min_realizations", c.min_realizations));
    c.range_gate_mm = static_cast<int>(kv.number("lrf", "max_range_mm", c.range_gate_mm));
    c.lrf_noise.stddev_mm = kv.number("lrf", "noise_stddev_mm", c.lrf_noise.stddev_mm);
    c.lrf_noise.outlier_prob = kv.number("lrf", "outlier_prob", c.lrf_noise.outlier_prob);
    c.lrf_noise.outlier_range_mm =
        kv.number("lrf", "outlier_range_mm", c.lrf_noise.outlier_range_mm);

    c.footprint.gap_mm = kv.number("footprint", "gap_mm", c.footprint.gap_mm);
    c.footprint.min_points =
        static_cast<int>(kv.number("footprint", "min_points", c.footprint.min_points));
    c.footprint.origin = {c.scene.lrf_pose.x, c.scene.lrf_pose.y};

    c.association_radius_mm =
        kv.number("fuse", "association_radius_mm", c.association_radius_mm);
    c.camera_pose.x = kv.number("fuse", "camera_x", 0);
    c.camera_pose.y = kv.number("fuse", "camera_y", 0);
    c.camera_pose.theta_rad =
        kv.number("fuse", "camera_theta_deg", 0) * std::numbers::pi / 180.0;

    c.plot_mm_per_px = kv.number("output", "mm_per_px", c.plot_mm_per_px);
    c.plot_size_px = static_cast<int>(kv.number("output", "plot_size_px", c.plot_size_px));
    if (kv.has("output", "timestamp")) c.timestamp = kv.text("output", "timestamp");
    return c;
  }

  nlohmann::json stage_params_json() const {
    return {
        {"sgm",
         {{"block_size", sgm.block_size}, {"num_disparities", sgm.num_disparities},
          {"min_disparity", sgm.min_disparity}, {"penalty_small", sgm.penalty_small},
          {"penalty_large", sgm.penalty_large}, {"paths", sgm.paths},
          {"lr_threshold", sgm.lr_threshold}, {"uniqueness_ratio", sgm.uniqueness_ratio}}},
        {"dilate",
         {{"enabled", dilate_enabled}, {"kernel", kernel.width},
          {"iterations", dilate_iterations}}},
        {"height",
         {{"ground_offset_px", height.ground_offset_px}, {"cm_per_px", height.cm_per_px},
          {"delta", height_delta}}},
        {"lrf",
         {{"realizations", lrf_realizations}, {"min_realizations", min_realizations},
          {"max_range_mm", range_gate_mm}, {"noise_stddev_mm", lrf_noise.stddev_mm},
          {"outlier_prob", lrf_noise.outlier_prob}}},
        {"footprint", {{"gap_mm", footprint.gap_mm}, {"min_points", footprint.min_points}}},
        {"fuse", {{"association_radius_mm", association_radius_mm}}},
    };
  }
};

/// Intermediate products of a pipeline run, for inspection/emission.
struct PipelineArtifacts {
  Image8 left, right, left_rect, right_rect, disp8, dilated;
  DisparityMap disparity;
  std::optional<HeightReport> height;
  std::vector<LrfSweep> sweeps;
  LrfSweep gated;
  std::vector<Point2> points;
  std::vector<Footprint> footprints;
};

namespace detail {

template <typename F>
auto pipeline_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace detail

/// Runs rectify -> disparity -> dilate -> height on the stereo branch and
/// decode -> aggregate -> gate -> points -> footprints on the LRF branch,
/// then fuses both into a dimensioned map. Stage failures surface as
/// StageError with the stage name attached.
inline EnvironmentMap run_pipeline(const PipelineConfig& cfg,
                                   PipelineArtifacts* artifacts = nullptr) {
  PipelineArtifacts local;
  PipelineArtifacts& art = artifacts ? *artifacts : local;

  // stereo branch
  StereoRig rig;
  if (cfg.synthetic) {
    detail::pipeline_stage("synth", [&] {
      RenderResult render = render_stereo(cfg.scene, cfg.rows, cfg.cols);
      art.left = std::move(render.left);
      art.right = std::move(render.right);
      return 0;
    });
    rig = cfg.scene.rig;
  } else {
    detail::pipeline_stage("input", [&] {
      art.left = load_pgm8(cfg.left_path);
      art.right = load_pgm8(cfg.right_path);
      if (!art.left.same_size(art.right))
        throw DimensionMismatch("left and right images differ in size");
      return 0;
    });
  }

  detail::pipeline_stage("rectify", [&] {
    if (!cfg.synthetic) rig = load_calibration(cfg.calibration_path);
    const RectificationMaps maps = build_rectification(rig, art.left.rows(), art.left.cols());
    art.left_rect = remap_image(art.left, maps.left_map);
    art.right_rect = remap_image(art.right, maps.right_map);
    return 0;
  });

  detail::pipeline_stage("disparity", [&] {
    art.disparity = compute_disparity(art.left_rect, art.right_rect, cfg.sgm);
    art.disp8 = normalize_to_image(art.disparity).first;
    return 0;
  });

  detail::pipeline_stage("dilate", [&] {
    art.dilated = cfg.dilate_enabled
                      ? dilate(art.disp8, cfg.kernel, cfg.dilate_iterations)
                      : art.disp8;
    return 0;
  });

  detail::pipeline_stage("height", [&] {
    art.height = height_from_disparity(art.dilated, cfg.height, cfg.height_delta);
    return 0;
  });

  // LRF branch
  detail::pipeline_stage("lrf-decode", [&] {
    std::vector<std::uint8_t> stream;
    if (cfg.synthetic) {
      const auto sweeps = raycast_sweep(cfg.scene, cfg.lrf_noise, cfg.lrf_realizations);
      stream = encode_packet_stream(sweeps);
    } else {
      std::ifstream in(cfg.packets_path, std::ios::binary);
      if (!in) throw IoFailure("cannot open packet stream " + cfg.packets_path.string());
      stream.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    const SplitResult split = split_packet_stream(stream);
    art.sweeps = assemble_sweeps(split.packets);
    return 0;
  });

  detail::pipeline_stage("lrf-aggregate", [&] {
    if (art.sweeps.empty()) {
      art.gated = LrfSweep{};
      return 0;
    }
    art.gated = aggregate_realizations(art.sweeps, cfg.min_realizations);
    return 0;
  });

  detail::pipeline_stage("lrf-gate", [&] {
    art.gated = range_gate(art.gated, cfg.range_gate_mm);
    return 0;
  });

  detail::pipeline_stage("lrf-map", [&] {
    art.points = to_points(art.gated, cfg.scene.lrf_pose);
    FootprintParams fp = cfg.footprint;
    fp.origin = {cfg.scene.lrf_pose.x, cfg.scene.lrf_pose.y};
    art.footprints = extract_footprints(art.points, fp);
    return 0;
  });

  return detail::pipeline_stage("fuse", [&] {
    const FuseResult fused =
        fuse(art.footprints, art.height, cfg.association_radius_mm, cfg.camera_pose);
    EnvironmentMap map;
    map.objects = fused.objects;
    const std::string frame_id = cfg.synthetic ? "synthetic" : cfg.left_path.string();
    for (auto& rec : map.objects) {
      rec.lrf_sweep_id = cfg.synthetic ? "synthetic" : cfg.packets_path.string();
      rec.stereo_frame_id = frame_id;
      rec.quality.disparity_valid_fraction = art.disparity.valid_fraction();
    }
    map.points = art.points;
    map.meta.seed = cfg.scene.seed;
    map.meta.camera_pose = cfg.camera_pose;
    map.meta.lrf_pose = cfg.scene.lrf_pose;
    map.meta.timestamp = cfg.timestamp;
    map.meta.disparity_valid_fraction = art.disparity.valid_fraction();
    map.meta.unattached_heights_cm = fused.unattached_heights_cm;
    map.meta.stage_params = cfg.stage_params_json();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(
                      detail::fnv1a64(cfg.config_text.data(), cfg.config_text.size())));
    map.meta.config_hash = hash;
    return map;
  });
}

/// Writes the intermediates of a pipeline run next to the map outputs.
inline void emit_intermediates(const std::filesystem::path& dir, const PipelineArtifacts& art) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  if (!art.left.empty()) save_pgm(dir / "left.pgm", art.left);
  if (!art.right.empty()) save_pgm(dir / "right.pgm", art.right);
  if (!art.left_rect.empty()) save_pgm(dir / "left_rect.pgm", art.left_rect);
  if (!art.right_rect.empty()) save_pgm(dir / "right_rect.pgm", art.right_rect);
  if (art.disparity.rows > 0) save_disparity(dir / "disparity.pgm", art.disparity);
  if (!art.disp8.empty()) save_pgm(dir / "disparity8.pgm", art.disp8);
  if (!art.dilated.empty()) save_pgm(dir / "dilated.pgm", art.dilated);
  if (art.height) {
    std::ofstream out(dir / "height.json");
    out << art.height->to_json().dump(2) << "\n";
  }
  for (std::size_t i = 0; i < art.sweeps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sweep_%03zu.csv", i);
    save_sweep_csv(dir / name, art.sweeps[i]);
  }
  save_sweep_csv(dir / "sweep_gated.csv", art.gated);
  save_points_csv(dir / "points.csv", art.points);
}

}  // namespace fusedim
