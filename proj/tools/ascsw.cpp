// Command-line entry point: postprocess | eval | synth | cloud | grid |
// convcheck | run.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ascsw/app.hpp"
#include "ascsw/config.hpp"
#include "ascsw/convcheck.hpp"
#include "ascsw/error.hpp"
#include "ascsw/geometry.hpp"
#include "ascsw/image_io.hpp"
#include "ascsw/metrics.hpp"

namespace fs = std::filesystem;
using namespace ascsw;

namespace {

// Flag overrides applied on top of the config file.
struct PipelineFlags {
  std::optional<std::size_t> k;
  std::optional<double> dist_threshold;
  std::optional<std::int64_t> min_area;
  std::optional<std::string> kernel;
  std::optional<int> connectivity;
  std::optional<std::string> keep;
  std::optional<std::string> morphology;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--k", k, "Sliding window size in frames (default 45)");
    cmd->add_option("--dist-threshold", dist_threshold, "Centroid match distance in pixels, strict < (default 50)");
    cmd->add_option("--min-area", min_area, "Keep regions with area > this many pixels (default 50)");
    cmd->add_option("--kernel", kernel, "Morphology kernel MxN (default 1x1)");
    cmd->add_option("--connectivity", connectivity, "4 or 8 (default 8)")->check(CLI::IsMember({4, 8}));
    cmd->add_option("--keep", keep, "argmax | fraction:F (default argmax)");
    cmd->add_option("--morphology", morphology, "erode | dilate | none (default erode)");
  }

  PipelineConfig apply(PipelineConfig c) const {
    if (k) c.window = *k;
    if (dist_threshold) c.dist_threshold = *dist_threshold;
    if (min_area) c.min_area = *min_area;
    if (kernel) c.se = parse_kernel(*kernel);
    if (connectivity) c.connectivity = *connectivity == 4 ? Connectivity::kFour : Connectivity::kEight;
    if (keep) c.keep = parse_keep_mode(*keep);
    if (morphology) c.morphology = parse_morphology(*morphology);
    c.validate();
    return c;
  }
};

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return run_config_from_json(read_json(path));
}

std::pair<int, int> parse_pair(const std::string& text, const char* what) {
  const auto x = text.find_first_of("x,");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + " must look like AxB, got '" + text + "'");
  }
}

std::pair<double, double> parse_real_pair(const std::string& text, const char* what) {
  const auto x = text.find(',');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stod(text.substr(0, x)), std::stod(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + " must look like A,B, got '" + text + "'");
  }
}

void print_run(const app::RunResult& r, const fs::path& out) {
  std::cout << "frames: " << r.frames << "\n";
  if (r.pre && r.post) {
    std::cout << metrics::to_table({{"pre-SW", *r.pre}, {"post-SW", *r.post}});
  }
  if (r.noise) {
    std::cout << "noise-free post-warm-up frames: " << r.noise->noise_free_frames << "/" << r.noise->post_warmup_frames
              << "\n";
  }
  if (r.grid) {
    std::cout << "occupied cells: " << r.grid->occupied_count() << " (pre-SW " << r.grid_pre->occupied_count()
              << ") over " << r.grid_frames << " frames\n";
  }
  std::cout << "manifest: " << (out / "manifest.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Sliding-window mask post-processing, obstacle geometry and segmentation metrics"};
  cli.require_subcommand(1);
  std::string config_path;
  cli.add_option("--config", config_path, "Run configuration JSON; flags override it")->check(CLI::ExistingFile);

  // postprocess
  auto* post = cli.add_subcommand("postprocess", "Denoise a mask sequence with sliding-window ID voting");
  PipelineFlags post_flags;
  post_flags.add_to(post);
  std::string post_in, post_out, post_log;
  bool post_stdin = false;
  auto* in_opt = post->add_option("--input", post_in, "Directory of PGM masks (lexicographic order)");
  post->add_flag("--stdin", post_stdin, "Read length-prefixed frames from standard input")->excludes(in_opt);
  post->add_option("--output", post_out, "Output directory for denoised masks")->required();
  post->add_option("--log", post_log, "Per-frame JSON-lines log (default OUTPUT/log.jsonl)");

  // eval
  auto* ev = cli.add_subcommand("eval", "Compare prediction masks against ground truth");
  std::string ev_pred, ev_gt, ev_json;
  bool ev_missing = false, ev_per_image = false;
  ev->add_option("--pred", ev_pred, "Prediction mask directory")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth mask directory")->required();
  ev->add_flag("--allow-missing", ev_missing, "Skip unmatched filenames instead of failing");
  ev->add_option("--json", ev_json, "Write the JSON report here ('-' for stdout)");
  ev->add_flag("--per-image", ev_per_image, "Include per-image metrics in the JSON report");

  // synth
  auto* sy = cli.add_subcommand("synth", "Generate a seeded noisy mask sequence with ground truth");
  std::string sy_out;
  std::optional<int> sy_frames, sy_noise;
  std::optional<std::string> sy_size;
  std::optional<double> sy_p;
  std::optional<std::uint64_t> sy_seed;
  bool sy_depth = false;
  sy->add_option("--out", sy_out, "Output dataset directory")->required();
  sy->add_option("--frames", sy_frames, "Frame count (default 90)");
  sy->add_option("--size", sy_size, "Frame size WxH (default 640x480)");
  sy->add_option("--noise", sy_noise, "Noise region count (default 3)");
  sy->add_option("--flicker", sy_p, "Per-frame noise probability (default 0.3)");
  sy->add_option("--seed", sy_seed, "Random seed (default 1)");
  sy->add_flag("--depth", sy_depth, "Also emit 16-bit depth frames");

  // cloud
  auto* cl = cli.add_subcommand("cloud", "Mask + depth + intrinsics -> obstacle point cloud (PLY)");
  std::string cl_mask, cl_depth, cl_intr, cl_out;
  double cl_leaf = 0.05;
  bool cl_raw = false;
  cl->add_option("--mask", cl_mask, "Binary mask PGM")->required()->check(CLI::ExistingFile);
  cl->add_option("--depth", cl_depth, "16-bit depth PGM")->required()->check(CLI::ExistingFile);
  cl->add_option("--intrinsics", cl_intr, "Intrinsics JSON (fx, fy, cx, cy, depth_scale)")
      ->required()
      ->check(CLI::ExistingFile);
  cl->add_option("--leaf", cl_leaf, "Voxel leaf size in metres")->capture_default_str();
  cl->add_flag("--no-downsample", cl_raw, "Skip the voxel filter");
  cl->add_option("--out", cl_out, "Output PLY")->required();

  // grid
  auto* gr = cli.add_subcommand("grid", "Point cloud (PLY) + extrinsics -> occupancy grid (PGM + JSON)");
  std::string gr_cloud, gr_extr, gr_out, gr_json;
  std::optional<double> gr_res;
  std::optional<std::string> gr_origin, gr_size, gr_band;
  std::optional<int> gr_hits;
  gr->add_option("--cloud", gr_cloud, "ASCII PLY in the camera frame")->required()->check(CLI::ExistingFile);
  gr->add_option("--extrinsics", gr_extr, "Camera-to-ground JSON (rotation 3x3, translation); identity if omitted")
      ->check(CLI::ExistingFile);
  gr->add_option("--resolution", gr_res, "Metres per cell (default 0.05)");
  gr->add_option("--origin", gr_origin, "Cell (0,0) corner X,Y in metres");
  gr->add_option("--size", gr_size, "Grid size WxH in cells");
  gr->add_option("--z-band", gr_band, "Obstacle height band ZMIN,ZMAX in metres (default 0.005,0.30)");
  gr->add_option("--min-hits", gr_hits, "Points needed to mark a cell (default 1)");
  gr->add_option("--out", gr_out, "Output PGM")->required();
  gr->add_option("--json", gr_json, "Sidecar JSON (default: OUT with .json)");

  // convcheck
  auto* cc = cli.add_subcommand("convcheck", "Randomized strip/ASConv/ASCSPP equivalence against dense convolution");
  nn::ConvCheckOptions cc_opts;
  cc->add_option("--cases", cc_opts.cases, "Randomized cases")->capture_default_str();
  cc->add_option("--seed", cc_opts.seed, "Seed")->capture_default_str();
  cc->add_option("--tolerance", cc_opts.tolerance, "Absolute tolerance")->capture_default_str();

  // run
  auto* rn = cli.add_subcommand("run", "Synthetic or real input through post-processing, metrics and the grid");
  PipelineFlags run_flags;
  run_flags.add_to(rn);
  std::string rn_out, rn_manifest, rn_masks, rn_depth, rn_gt;
  std::optional<std::uint64_t> rn_seed;
  std::optional<int> rn_frames;
  bool rn_verify = false;
  rn->add_option("--out", rn_out, "Run output directory")->required();
  rn->add_option("--manifest", rn_manifest, "Re-run the configuration recorded in a manifest")
      ->check(CLI::ExistingFile);
  rn->add_flag("--verify", rn_verify, "With --manifest: compare every output hash, exit 3 on mismatch");
  rn->add_option("--masks", rn_masks, "Real input: mask directory");
  rn->add_option("--depth", rn_depth, "Real input: depth directory (paired by sorted filename)");
  rn->add_option("--gt", rn_gt, "Real input: ground-truth directory (paired by filename)");
  rn->add_option("--seed", rn_seed, "Synthetic input seed");
  rn->add_option("--frames", rn_frames, "Synthetic input frame count");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kValidation);
  }

  try {
    if (*post) {
      const PipelineConfig cfg = post_flags.apply(load_config(config_path).pipeline);
      const fs::path out = post_out;
      const fs::path log = post_log.empty() ? out / "log.jsonl" : fs::path(post_log);
      app::PostprocessSummary s;
      if (post_stdin) {
        std::ios::sync_with_stdio(false);
        s = app::postprocess_stream(cfg, std::cin, out, log);
      } else {
        if (post_in.empty()) throw ValidationError("postprocess: give --input DIR or --stdin");
        s = app::postprocess_directory(cfg, post_in, out, log);
      }
      std::cout << "processed " << s.frames << " frames -> " << out.string() << "\n";
      return 0;
    }

    if (*ev) {
      const auto report = metrics::batch_eval(ev_pred, ev_gt, ev_missing);
      std::cout << metrics::to_table({{fs::path(ev_pred).filename().string(), report.total}});
      for (const auto& m : report.missing_pred) std::cerr << "warning: no prediction for " << m << "\n";
      for (const auto& m : report.missing_gt) std::cerr << "warning: no ground truth for " << m << "\n";
      if (ev_json == "-") {
        std::cout << metrics::to_json(report, ev_per_image) << "\n";
      } else if (!ev_json.empty()) {
        write_json(ev_json, nlohmann::json::parse(metrics::to_json(report, ev_per_image)));
      }
      return 0;
    }

    if (*sy) {
      RunConfig base = load_config(config_path);
      synth::SynthConfig cfg = base.synth.value_or(synth::SynthConfig{});
      if (sy_frames) cfg.frames = *sy_frames;
      if (sy_size) std::tie(cfg.width, cfg.height) = parse_pair(*sy_size, "--size");
      if (sy_noise) cfg.noise.count = *sy_noise;
      if (sy_p) cfg.noise.flicker_p = *sy_p;
      if (sy_seed) cfg.seed = *sy_seed;
      if (sy_depth) cfg.depth.enabled = true;
      const auto seq = synth::generate(cfg);
      app::write_synth_dataset(cfg, seq, sy_out);
      std::cout << "wrote " << seq.input.size() << " frames with " << seq.noise_regions.size() << " noise regions to "
                << sy_out << "\n";
      return 0;
    }

    if (*cl) {
      const auto intr = intrinsics_from_json(read_json(cl_intr));
      const BinaryMask mask = read_mask(cl_mask);
      const geom::DepthFrame depth = geom::read_depth_pgm(cl_depth);
      geom::PointCloud cloud = geom::backproject(depth, intr, mask);
      const std::size_t raw = cloud.size();
      if (!cl_raw) cloud = geom::voxel_downsample(cloud, cl_leaf);
      geom::write_ply(cl_out, cloud);
      std::cout << raw << " points -> " << cloud.size() << " after downsampling -> " << cl_out << "\n";
      return 0;
    }

    if (*gr) {
      RunConfig base = load_config(config_path);
      geom::GridSpec spec = base.geometry.grid;
      if (gr_res) spec.resolution = *gr_res;
      if (gr_origin) std::tie(spec.origin_x, spec.origin_y) = parse_real_pair(*gr_origin, "--origin");
      if (gr_size) std::tie(spec.width, spec.height) = parse_pair(*gr_size, "--size");
      if (gr_band) std::tie(spec.z_min, spec.z_max) = parse_real_pair(*gr_band, "--z-band");
      if (gr_hits) spec.min_hits = *gr_hits;
      const geom::Extrinsics extr =
          gr_extr.empty() ? base.geometry.extrinsics : extrinsics_from_json(read_json(gr_extr));
      const auto cloud = geom::read_ply(gr_cloud);
      const auto grid = geom::rasterize_obstacles(cloud, spec, extr);
      const fs::path json_path = gr_json.empty() ? fs::path(gr_out).replace_extension(".json") : fs::path(gr_json);
      geom::write_grid(gr_out, json_path, grid);
      std::cout << grid.occupied_count() << " occupied cells, " << grid.out_of_bounds
                << " in-band points outside the grid -> " << gr_out << "\n";
      return 0;
    }

    if (*cc) {
      const auto report = nn::run_convcheck(cc_opts);
      std::cout << report.to_json() << "\n";
      std::cout << "max deviation " << report.max_dev() << (report.passed() ? " PASS" : " FAIL") << "\n";
      return report.passed() ? 0 : static_cast<int>(ExitCode::kCheckFailed);
    }

    if (*rn) {
      RunConfig cfg;
      nlohmann::json manifest;
      if (!rn_manifest.empty()) {
        manifest = read_json(rn_manifest);
        cfg = app::config_from_manifest(manifest);
      } else {
        cfg = load_config(config_path);
        cfg.pipeline = run_flags.apply(cfg.pipeline);
        if (!rn_masks.empty()) {
          cfg.synth.reset();
          cfg.inputs = {rn_masks, rn_depth, rn_gt};
        } else if (!cfg.synth && cfg.inputs.masks.empty()) {
          cfg.synth = synth::SynthConfig{};
          cfg.synth->depth.enabled = true;
        }
        if (cfg.synth) {
          if (rn_seed) cfg.synth->seed = *rn_seed;
          if (rn_frames) cfg.synth->frames = *rn_frames;
        }
      }
      const auto result = app::run_pipeline(cfg, rn_out);
      print_run(result, rn_out);
      if (rn_verify) {
        if (manifest.is_null()) throw ValidationError("--verify needs --manifest");
        const auto bad = app::verify_outputs(manifest, rn_out);
        for (const auto& b : bad) std::cerr << "mismatch: " << b << "\n";
        if (!bad.empty()) return static_cast<int>(ExitCode::kCheckFailed);
        std::cout << "all " << manifest.at("outputs").size() << " outputs reproduced bitwise\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kValidation);
  }
  return 0;
}
