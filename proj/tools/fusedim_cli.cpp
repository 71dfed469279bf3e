// fusedim command-line front end: pipeline stages as subcommands plus the
// synthetic scene generator. Exit codes: 0 success, 2 config error,
// 3 input error, 4 stage failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fusedim/fusedim.hpp"

namespace fs = std::filesystem;
using namespace fusedim;

namespace {

KeyValueFile load_kv_or_default(const std::string& path) {
  if (path.empty()) {
    std::istringstream empty;
    return KeyValueFile::parse(empty, "<defaults>");
  }
  return KeyValueFile::parse_file(path);
}

std::string read_text(const std::string& path) {
  if (path.empty()) return "";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

nlohmann::json footprints_to_json(const std::vector<Footprint>& fps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& fp : fps)
    arr.push_back({{"center_mm", {fp.center.x, fp.center.y}},
                   {"length_mm", fp.length_mm},
                   {"width_mm", fp.width_mm},
                   {"yaw_rad", fp.yaw_rad},
                   {"support", fp.support_count}});
  return {{"footprints", arr}};
}

std::vector<Footprint> footprints_from_json(const nlohmann::json& j) {
  std::vector<Footprint> fps;
  for (const auto& o : j.at("footprints")) {
    Footprint fp;
    fp.center = {o.at("center_mm")[0].get<double>(), o.at("center_mm")[1].get<double>()};
    fp.length_mm = o.at("length_mm").get<double>();
    fp.width_mm = o.at("width_mm").get<double>();
    fp.yaw_rad = o.at("yaw_rad").get<double>();
    fp.support_count = o.at("support").get<int>();
    fps.push_back(fp);
  }
  return fps;
}

MatcherParams matcher_from_kv(const KeyValueFile& kv) {
  MatcherParams p = MatcherParams::for_block(
      static_cast<int>(kv.number("sgm", "block_size", 9)));
  p.num_disparities = static_cast<int>(kv.number("sgm", "num_disparities", p.num_disparities));
  p.min_disparity = static_cast<int>(kv.number("sgm", "min_disparity", 0));
  p.penalty_small = static_cast<int>(kv.number("sgm", "penalty_small", p.penalty_small));
  p.penalty_large = static_cast<int>(kv.number("sgm", "penalty_large", p.penalty_large));
  p.paths = static_cast<int>(kv.number("sgm", "paths", p.paths));
  p.lr_threshold = kv.number("sgm", "lr_threshold", p.lr_threshold);
  p.uniqueness_ratio =
      static_cast<int>(kv.number("sgm", "uniqueness_ratio", p.uniqueness_ratio));
  p.validate();
  return p;
}

HeightConfig height_from_kv(const KeyValueFile& kv) {
  HeightConfig cfg;
  cfg.ground_offset_px = kv.number("height", "ground_offset_px", cfg.ground_offset_px);
  cfg.cm_per_px = kv.number("height", "cm_per_px", cfg.cm_per_px);
  cfg.camera_height_cm = kv.number("height", "camera_height_cm", cfg.camera_height_cm);
  cfg.working_distance_m = kv.number("height", "working_distance_m", cfg.working_distance_m);
  cfg.validate();
  return cfg;
}

struct CliState {
  // rectify
  std::string rect_calibration, rect_left, rect_right, rect_out;
  bool rect_emit_maps = false;
  // disparity
  std::string disp_left, disp_right, disp_config, disp_out;
  // dilate
  std::string dil_in, dil_out;
  int dil_kernel = 5, dil_iterations = 1;
  // height
  std::string h_in, h_config, h_method = "max-intensity", h_out;
  int h_delta = 8;
  // lrf
  std::string lrf_in, lrf_out, lrf_out_dir;
  std::vector<std::string> lrf_inputs;
  int lrf_min_realizations = 3, lrf_max_range = 3000;
  double lrf_gap = 120;
  int lrf_min_points = 5;
  double lrf_x = 0, lrf_y = 0, lrf_theta_deg = 0;
  // synth
  std::string synth_config, synth_out;
  int synth_rows = 480, synth_cols = 640, synth_realizations = 5;
  double synth_noise = 3.0, synth_outlier = 0.02;
  std::optional<std::uint64_t> synth_seed;
  // fuse
  std::string fuse_footprints, fuse_height, fuse_points, fuse_out, fuse_plot;
  double fuse_radius = 300;
  // run
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  bool run_emit = false;
};

int cmd_rectify(const CliState& st) {
  const StereoRig rig = load_calibration(st.rect_calibration);
  const Image8 left = load_pgm8(st.rect_left);
  const Image8 right = load_pgm8(st.rect_right);
  if (!left.same_size(right)) throw DimensionMismatch("left and right images differ in size");
  for (const auto* side : {&rig.left, &rig.right})
    if (auto warn = check_principal_point(side->intr, left.rows(), left.cols()))
      std::cerr << "warning: " << *warn << "\n";
  const RectificationMaps maps = build_rectification(rig, left.rows(), left.cols());
  fs::create_directories(st.rect_out);
  save_pgm(fs::path(st.rect_out) / "left_rect.pgm", remap_image(left, maps.left_map));
  save_pgm(fs::path(st.rect_out) / "right_rect.pgm", remap_image(right, maps.right_map));
  if (st.rect_emit_maps) {
    save_remap_grid(fs::path(st.rect_out) / "left.rmap", maps.left_map);
    save_remap_grid(fs::path(st.rect_out) / "right.rmap", maps.right_map);
  }
  std::cout << "rectified: f=" << maps.focal << " T=" << maps.baseline << " cx=" << maps.cx
            << " cy=" << maps.cy << "\n";
  return 0;
}

int cmd_disparity(const CliState& st) {
  const KeyValueFile kv = load_kv_or_default(st.disp_config);
  const MatcherParams params = matcher_from_kv(kv);
  const Image8 left = load_pgm8(st.disp_left);
  const Image8 right = load_pgm8(st.disp_right);
  const DisparityMap disp = compute_disparity(left, right, params);
  fs::create_directories(st.disp_out);
  save_disparity(fs::path(st.disp_out) / "disparity.pgm", disp);
  save_pgm(fs::path(st.disp_out) / "disparity8.pgm", normalize_to_image(disp).first);
  std::cout << "disparity: valid fraction " << disp.valid_fraction() << "\n";
  return 0;
}

int cmd_dilate(const CliState& st) {
  const Image8 img = load_pgm8(st.dil_in);
  save_pgm(st.dil_out, dilate(img, {st.dil_kernel, st.dil_kernel}, st.dil_iterations));
  return 0;
}

int cmd_height(const CliState& st) {
  const KeyValueFile kv = load_kv_or_default(st.h_config);
  const HeightConfig cfg = height_from_kv(kv);
  const Image8 img = load_pgm8(st.h_in);
  std::vector<HeightReport> reports;
  if (st.h_method == "max-intensity" || st.h_method == "both")
    reports.push_back(height_from_disparity(img, cfg, st.h_delta));
  if (st.h_method == "canny-rect" || st.h_method == "both")
    reports.push_back(height_from_canny_rect(img, cfg));
  if (reports.empty())
    throw ConfigError("--method must be max-intensity, canny-rect or both");
  for (const auto& rep : reports) std::cout << rep.to_text() << "\n";
  if (!st.h_out.empty()) {
    nlohmann::json j = reports.size() == 1 ? reports[0].to_json() : nlohmann::json::array();
    if (reports.size() > 1)
      for (const auto& rep : reports) j.push_back(rep.to_json());
    write_json(st.h_out, j);
  }
  return 0;
}

int cmd_lrf_decode(const CliState& st) {
  std::ifstream in(st.lrf_in, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + st.lrf_in);
  const std::vector<std::uint8_t> stream((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const SplitResult res = split_packet_stream(stream);
  const auto sweeps = assemble_sweeps(res.packets);
  fs::create_directories(st.lrf_out_dir);
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sweep_%03zu.csv", i);
    save_sweep_csv(fs::path(st.lrf_out_dir) / name, sweeps[i]);
  }
  std::cout << "decoded " << res.packets.size() << " packets into " << sweeps.size()
            << " sweeps (" << res.bytes_skipped << " bytes skipped, " << res.checksum_rejects
            << " checksum rejects)\n";
  return 0;
}

int cmd_lrf_aggregate(const CliState& st) {
  std::vector<LrfSweep> sweeps;
  for (const auto& path : st.lrf_inputs) sweeps.push_back(load_sweep_csv(path));
  const LrfSweep agg = aggregate_realizations(sweeps, st.lrf_min_realizations);
  save_sweep_csv(st.lrf_out, agg);
  std::cout << "aggregated " << sweeps.size() << " sweeps, coverage " << agg.coverage << "/360\n";
  return 0;
}

int cmd_lrf_map(const CliState& st) {
  const LrfSweep sweep = range_gate(load_sweep_csv(st.lrf_in), st.lrf_max_range);
  const SensorPose pose{st.lrf_x, st.lrf_y, st.lrf_theta_deg * std::numbers::pi / 180.0};
  const auto points = to_points(sweep, pose);
  FootprintParams params;
  params.gap_mm = st.lrf_gap;
  params.min_points = st.lrf_min_points;
  params.origin = {pose.x, pose.y};
  const auto footprints = extract_footprints(points, params);
  fs::create_directories(st.lrf_out_dir);
  save_points_csv(fs::path(st.lrf_out_dir) / "points.csv", points);
  write_json(fs::path(st.lrf_out_dir) / "footprints.json", footprints_to_json(footprints));
  std::cout << points.size() << " gated points, " << footprints.size() << " footprints\n";
  return 0;
}

SceneSpec scene_for_synth(const CliState& st) {
  SceneSpec scene = SceneSpec::from_config(load_kv_or_default(st.synth_config));
  if (st.synth_seed) scene.seed = *st.synth_seed;
  return scene;
}

int cmd_synth_stereo(const CliState& st) {
  const SceneSpec scene = scene_for_synth(st);
  const RenderResult r = render_stereo(scene, st.synth_rows, st.synth_cols);
  fs::create_directories(st.synth_out);
  save_pgm(fs::path(st.synth_out) / "left.pgm", r.left);
  save_pgm(fs::path(st.synth_out) / "right.pgm", r.right);
  save_disparity(fs::path(st.synth_out) / "gt_disparity.pgm", r.gt_disparity);
  std::cout << "rendered " << st.synth_cols << "x" << st.synth_rows << " pair, gt range "
            << r.gt_disparity.num_disparities << " px\n";
  return 0;
}

int cmd_synth_sweep(const CliState& st) {
  const SceneSpec scene = scene_for_synth(st);
  const LrfNoise noise{st.synth_noise, st.synth_outlier, 3000.0};
  const auto sweeps = raycast_sweep(scene, noise, st.synth_realizations);
  fs::create_directories(st.synth_out);
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sweep_%03zu.csv", i);
    save_sweep_csv(fs::path(st.synth_out) / name, sweeps[i]);
  }
  std::cout << "raycast " << sweeps.size() << " realizations\n";
  return 0;
}

int cmd_synth_packets(const CliState& st) {
  const SceneSpec scene = scene_for_synth(st);
  const LrfNoise noise{st.synth_noise, st.synth_outlier, 3000.0};
  const auto sweeps = raycast_sweep(scene, noise, st.synth_realizations);
  const auto stream = encode_packet_stream(sweeps);
  std::ofstream out(st.synth_out, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + st.synth_out);
  out.write(reinterpret_cast<const char*>(stream.data()),
            static_cast<std::streamsize>(stream.size()));
  std::cout << "wrote " << stream.size() << " bytes (" << sweeps.size() << " sweeps)\n";
  return 0;
}

int cmd_fuse(const CliState& st) {
  std::ifstream in(st.fuse_footprints);
  if (!in) throw IoFailure("cannot open " + st.fuse_footprints);
  nlohmann::json jf;
  in >> jf;
  const auto footprints = footprints_from_json(jf);

  std::optional<HeightReport> height;
  if (!st.fuse_height.empty()) {
    std::ifstream hin(st.fuse_height);
    if (!hin) throw IoFailure("cannot open " + st.fuse_height);
    nlohmann::json jh;
    hin >> jh;
    height = HeightReport::from_json(jh.is_array() ? jh.at(0) : jh);
  }

  const FuseResult fused = fuse(footprints, height, st.fuse_radius);
  EnvironmentMap map;
  map.objects = fused.objects;
  map.meta.unattached_heights_cm = fused.unattached_heights_cm;
  if (!st.fuse_points.empty()) map.points = load_points_csv(st.fuse_points);
  export_map_json(st.fuse_out, map);
  if (!st.fuse_plot.empty()) export_map_plot(st.fuse_plot, map);
  std::cout << map.objects.size() << " objects ("
            << fused.unattached_heights_cm.size() << " unattached heights)\n";
  return 0;
}

int cmd_run(const CliState& st) {
  const KeyValueFile kv = KeyValueFile::parse_file(st.run_config);
  PipelineConfig cfg = PipelineConfig::from_config(kv, read_text(st.run_config));
  if (st.run_seed) cfg.scene.seed = *st.run_seed;

  PipelineArtifacts art;
  const EnvironmentMap map = run_pipeline(cfg, &art);
  fs::create_directories(st.run_out);
  export_map_json(fs::path(st.run_out) / "map.json", map);
  export_map_plot(fs::path(st.run_out) / "map.ppm", map, cfg.plot_mm_per_px, cfg.plot_size_px);
  if (st.run_emit) emit_intermediates(fs::path(st.run_out) / "intermediates", art);

  std::cout << "objects: " << map.objects.size() << "\n";
  for (const auto& rec : map.objects) {
    std::cout << "  " << rec.footprint.length_mm << " x " << rec.footprint.width_mm << " mm";
    if (rec.height_cm)
      std::cout << " x " << *rec.height_cm << " cm";
    else
      std::cout << " x (height unknown)";
    std::cout << " at (" << rec.footprint.center.x << ", " << rec.footprint.center.y << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"object dimension mapping from a 360-degree LRF fused with stereo disparity"};
  app.require_subcommand(1);
  CliState st;

  auto* rectify = app.add_subcommand("rectify", "undistort and row-align a stereo pair");
  rectify->add_option("--config,--calibration", st.rect_calibration, "calibration file")
      ->required();
  rectify->add_option("--left", st.rect_left)->required();
  rectify->add_option("--right", st.rect_right)->required();
  rectify->add_option("--out", st.rect_out, "output directory")->required();
  rectify->add_flag("--emit-intermediates", st.rect_emit_maps, "also write RMAP grids");

  auto* disparity = app.add_subcommand("disparity", "semi-global block matching");
  disparity->add_option("--left", st.disp_left)->required();
  disparity->add_option("--right", st.disp_right)->required();
  disparity->add_option("--config", st.disp_config, "config with an [sgm] section");
  disparity->add_option("--out", st.disp_out, "output directory")->required();

  auto* dil = app.add_subcommand("dilate", "grayscale max-filter noise reduction");
  dil->add_option("--in", st.dil_in)->required();
  dil->add_option("--out", st.dil_out)->required();
  dil->add_option("--kernel", st.dil_kernel, "odd kernel size");
  dil->add_option("--iterations", st.dil_iterations);

  auto* height = app.add_subcommand("height", "object height from a disparity image");
  height->add_option("--in", st.h_in, "8-bit disparity image")->required();
  height->add_option("--config", st.h_config, "config with a [height] section");
  height->add_option("--method", st.h_method, "max-intensity | canny-rect | both");
  height->add_option("--delta", st.h_delta, "max-intensity tolerance");
  height->add_option("--out", st.h_out, "write the report as JSON");

  auto* lrf = app.add_subcommand("lrf", "laser range finder pipeline");
  lrf->require_subcommand(1);
  auto* decode = lrf->add_subcommand("decode", "split a packet stream into sweep CSVs");
  decode->add_option("--in", st.lrf_in, "binary packet stream")->required();
  decode->add_option("--out", st.lrf_out_dir, "output directory")->required();
  auto* aggregate = lrf->add_subcommand("aggregate", "median across realizations");
  aggregate->add_option("--in", st.lrf_inputs, "sweep CSVs")->required()->expected(-1);
  aggregate->add_option("--min-realizations", st.lrf_min_realizations);
  aggregate->add_option("--out", st.lrf_out, "aggregated sweep CSV")->required();
  auto* lmap = lrf->add_subcommand("map", "gate, project and fit footprints");
  lmap->add_option("--in", st.lrf_in, "sweep CSV")->required();
  lmap->add_option("--max-range", st.lrf_max_range, "range gate, mm");
  lmap->add_option("--gap", st.lrf_gap, "cluster break distance, mm");
  lmap->add_option("--min-points", st.lrf_min_points);
  lmap->add_option("--pose-x", st.lrf_x, "sensor x, mm");
  lmap->add_option("--pose-y", st.lrf_y, "sensor y, mm");
  lmap->add_option("--pose-theta", st.lrf_theta_deg, "sensor heading, degrees");
  lmap->add_option("--out", st.lrf_out_dir, "output directory")->required();

  auto* synth = app.add_subcommand("synth", "synthetic scene oracle");
  synth->require_subcommand(1);
  auto add_synth_common = [&](CLI::App* c) {
    c->add_option("--config", st.synth_config, "scene config (defaults otherwise)");
    c->add_option("--seed", st.synth_seed, "override the scene seed");
  };
  auto* sstereo = synth->add_subcommand("stereo", "render a stereo pair with ground truth");
  add_synth_common(sstereo);
  sstereo->add_option("--rows", st.synth_rows);
  sstereo->add_option("--cols", st.synth_cols);
  sstereo->add_option("--out", st.synth_out, "output directory")->required();
  auto* ssweep = synth->add_subcommand("sweep", "raycast LRF realizations");
  add_synth_common(ssweep);
  ssweep->add_option("--realizations", st.synth_realizations);
  ssweep->add_option("--noise-stddev", st.synth_noise, "mm");
  ssweep->add_option("--outlier-prob", st.synth_outlier);
  ssweep->add_option("--out", st.synth_out, "output directory")->required();
  auto* spackets = synth->add_subcommand("packets", "encode raycast sweeps as a packet stream");
  add_synth_common(spackets);
  spackets->add_option("--realizations", st.synth_realizations);
  spackets->add_option("--noise-stddev", st.synth_noise, "mm");
  spackets->add_option("--outlier-prob", st.synth_outlier);
  spackets->add_option("--out", st.synth_out, "output file")->required();

  auto* fusec = app.add_subcommand("fuse", "attach stereo heights to LRF footprints");
  fusec->add_option("--footprints", st.fuse_footprints, "footprints.json")->required();
  fusec->add_option("--height", st.fuse_height, "height report JSON");
  fusec->add_option("--points", st.fuse_points, "points CSV for the map");
  fusec->add_option("--radius", st.fuse_radius, "association radius, mm");
  fusec->add_option("--out", st.fuse_out, "map JSON")->required();
  fusec->add_option("--plot", st.fuse_plot, "also write a PPM plot");

  auto* run = app.add_subcommand("run", "full pipeline from a single config");
  run->add_option("--config", st.run_config)->required();
  run->add_option("--out", st.run_out, "output directory")->required();
  run->add_option("--seed", st.run_seed, "override the scene seed");
  run->add_flag("--emit-intermediates", st.run_emit);

  try {
    app.parse(argc, argv);
    if (rectify->parsed()) return cmd_rectify(st);
    if (disparity->parsed()) return cmd_disparity(st);
    if (dil->parsed()) return cmd_dilate(st);
    if (height->parsed()) return cmd_height(st);
    if (lrf->parsed()) {
      if (decode->parsed()) return cmd_lrf_decode(st);
      if (aggregate->parsed()) return cmd_lrf_aggregate(st);
      if (lmap->parsed()) return cmd_lrf_map(st);
    }
    if (synth->parsed()) {
      if (sstereo->parsed()) return cmd_synth_stereo(st);
      if (ssweep->parsed()) return cmd_synth_sweep(st);
      if (spackets->parsed()) return cmd_synth_packets(st);
    }
    if (fusec->parsed()) return cmd_fuse(st);
    if (run->parsed()) return cmd_run(st);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 4;
  } catch (const IoFailure& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
