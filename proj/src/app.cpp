#include "ascsw/app.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>

#include "ascsw/error.hpp"
#include "ascsw/hash.hpp"
#include "ascsw/image_io.hpp"

namespace ascsw::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.pgm", index);
  return buf;
}

std::string frame_log_line(const FrameResult& r, const std::string& name) {
  json j;
  j["frame"] = r.frame_index;
  j["file"] = name;
  j["regions"] = r.assigned.size();
  json assigned = json::array();
  for (const auto& a : r.assigned) {
    assigned.push_back({{"id", a.id.value},
                        {"label", a.region.label},
                        {"area", a.region.area},
                        {"centroid", {a.region.centroid.x, a.region.centroid.y}}});
  }
  j["assigned"] = std::move(assigned);
  json kept = json::array();
  for (const auto& id : r.kept_ids) kept.push_back(id.value);
  j["kept"] = std::move(kept);
  json votes = json::array();
  for (const auto& [id, n] : r.vote_counts) votes.push_back({id.value, n});
  j["votes"] = std::move(votes);
  return j.dump();
}

namespace {

std::ofstream open_log(const fs::path& log_path) {
  if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write " + log_path.string());
  return log;
}

void emit(SequenceProcessor& proc, const BinaryMask& mask, const std::string& name, const fs::path& out_dir,
          std::ostream& log, PostprocessSummary& summary) {
  const FrameResult r = proc.process(mask);
  write_mask(out_dir / name, r.output);
  log << frame_log_line(r, name) << '\n';
  summary.names.push_back(name);
  ++summary.frames;
}

}  // namespace

PostprocessSummary postprocess_directory(const PipelineConfig& config, const fs::path& in_dir, const fs::path& out_dir,
                                         const fs::path& log_path) {
  const auto files = list_files(in_dir);
  if (files.empty()) throw ValidationError("postprocess: no .pgm masks in " + in_dir.string());
  fs::create_directories(out_dir);
  std::ofstream log = open_log(log_path);
  SequenceProcessor proc(config);
  PostprocessSummary summary;
  for (const auto& f : files) emit(proc, read_mask(f), f.filename().string(), out_dir, log, summary);
  if (!log) throw IoError("failed writing " + log_path.string());
  return summary;
}

PostprocessSummary postprocess_stream(const PipelineConfig& config, std::istream& in, const fs::path& out_dir,
                                      const fs::path& log_path) {
  fs::create_directories(out_dir);
  std::ofstream log = open_log(log_path);
  SequenceProcessor proc(config);
  PostprocessSummary summary;
  while (auto mask = read_stream_frame(in)) emit(proc, *mask, frame_name(summary.frames), out_dir, log, summary);
  if (!log) throw IoError("failed writing " + log_path.string());
  return summary;
}

void write_synth_dataset(const synth::SynthConfig& cfg, const synth::SynthSequence& seq, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  for (std::size_t t = 0; t < seq.input.size(); ++t) {
    write_mask(out_dir / "masks" / frame_name(t), seq.input[t]);
    write_mask(out_dir / "gt" / frame_name(t), seq.ground_truth[t]);
    if (!seq.depth.empty()) geom::write_depth_pgm(out_dir / "depth" / frame_name(t), seq.depth[t]);
  }
  write_json(out_dir / "synth.json", to_json(cfg));
  if (cfg.depth.enabled) {
    write_json(out_dir / "intrinsics.json", to_json(cfg.depth.intrinsics));
    write_json(out_dir / "extrinsics.json", to_json(synth::downward_camera(cfg.depth)));
  }
}

geom::PointCloud obstacle_cloud(const BinaryMask& mask, const geom::DepthFrame& depth,
                                const geom::CameraIntrinsics& intr, double leaf) {
  return geom::voxel_downsample(geom::backproject(depth, intr, mask), leaf);
}

std::size_t warmup_end(const PipelineConfig& config) { return config.window - 1; }

NoiseStats noise_stats(const std::vector<BinaryMask>& input, const std::vector<BinaryMask>& ground_truth,
                       const std::vector<BinaryMask>& output, std::size_t first) {
  NoiseStats s;
  for (std::size_t t = first; t < output.size(); ++t) {
    ++s.post_warmup_frames;
    const auto in = input[t].data();
    const auto gt = ground_truth[t].data();
    const auto out = output[t].data();
    bool noisy = false;
    for (std::size_t i = 0; i < out.size() && !noisy; ++i) noisy = out[i] && in[i] && !gt[i];
    if (!noisy) ++s.noise_free_frames;
  }
  return s;
}

std::map<std::string, std::string> hash_tree(const fs::path& dir, const fs::path& base) {
  std::map<std::string, std::string> hashes;
  if (!fs::exists(dir)) return hashes;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    hashes[fs::relative(entry.path(), base).generic_string()] = sha256_file(entry.path());
  }
  return hashes;
}

namespace {

struct LoadedInput {
  std::vector<std::string> names;
  std::vector<BinaryMask> masks;
  std::vector<BinaryMask> ground_truth;  // empty if unavailable
  std::vector<geom::DepthFrame> depth;   // empty if unavailable
  std::map<std::string, std::string> hashes;
};

LoadedInput load_real_input(const InputPaths& paths) {
  LoadedInput in;
  const auto mask_files = list_files(paths.masks);
  if (mask_files.empty()) throw ValidationError("run: no .pgm masks in " + paths.masks.string());
  for (const auto& f : mask_files) {
    in.names.push_back(f.filename().string());
    in.masks.push_back(read_mask(f));
    in.hashes["masks/" + f.filename().string()] = sha256_file(f);
  }
  if (!paths.depth.empty()) {
    const auto depth_files = list_files(paths.depth);
    if (depth_files.size() != mask_files.size()) {
      throw ValidationError("run: " + std::to_string(mask_files.size()) + " masks but " +
                            std::to_string(depth_files.size()) + " depth frames");
    }
    for (const auto& f : depth_files) {
      in.depth.push_back(geom::read_depth_pgm(f));
      in.hashes["depth/" + f.filename().string()] = sha256_file(f);
    }
  }
  if (!paths.ground_truth.empty()) {
    for (const auto& name : in.names) {
      const fs::path f = paths.ground_truth / name;
      if (!fs::exists(f)) throw ValidationError("run: no ground truth for " + name);
      in.ground_truth.push_back(read_mask(f));
      in.hashes["ground_truth/" + name] = sha256_file(f);
    }
  }
  return in;
}

}  // namespace

RunResult run_pipeline(const RunConfig& requested, const fs::path& out_dir) {
  requested.validate();
  RunConfig config = requested;
  fs::create_directories(out_dir);

  LoadedInput input;
  if (config.synth) {
    // The synthetic camera defines the geometry.
    if (config.synth->depth.enabled) {
      config.geometry.intrinsics = config.synth->depth.intrinsics;
      config.geometry.extrinsics = synth::downward_camera(config.synth->depth);
    }
    synth::SynthSequence seq = synth::generate(*config.synth);
    write_synth_dataset(*config.synth, seq, out_dir / "input");
    for (std::size_t t = 0; t < seq.input.size(); ++t) input.names.push_back(frame_name(t));
    input.masks = std::move(seq.input);
    input.ground_truth = std::move(seq.ground_truth);
    input.depth = std::move(seq.depth);
    input.hashes = hash_tree(out_dir / "input", out_dir);
  } else {
    input = load_real_input(config.inputs);
  }

  RunResult result;
  result.frames = input.masks.size();

  // Sliding-window post-processing.
  std::vector<BinaryMask> outputs;
  {
    SequenceProcessor proc(config.pipeline);
    std::ofstream log = open_log(out_dir / "post_log.jsonl");
    for (std::size_t t = 0; t < input.masks.size(); ++t) {
      FrameResult r = proc.process(input.masks[t]);
      write_mask(out_dir / "post" / input.names[t], r.output);
      log << frame_log_line(r, input.names[t]) << '\n';
      outputs.push_back(std::move(r.output));
    }
    if (!log) throw IoError("failed writing post_log.jsonl");
  }

  json summary;
  summary["frames"] = result.frames;
  if (!input.ground_truth.empty()) {
    const auto pre = metrics::batch_eval(input.masks, input.ground_truth, input.names);
    const auto post = metrics::batch_eval(outputs, input.ground_truth, input.names);
    result.pre = pre.total;
    result.post = post.total;
    result.noise = noise_stats(input.masks, input.ground_truth, outputs, warmup_end(config.pipeline));
    json m;
    m["pre_sw"] = json::parse(metrics::to_json(pre, false));
    m["post_sw"] = json::parse(metrics::to_json(post, false));
    write_json(out_dir / "metrics.json", m);
    std::ofstream table(out_dir / "metrics.txt", std::ios::trunc);
    table << metrics::to_table({{"pre-SW", pre.total}, {"post-SW", post.total}});
    summary["noise"] = {{"post_warmup_frames", result.noise->post_warmup_frames},
                        {"noise_free_frames", result.noise->noise_free_frames},
                        {"noise_free_fraction", result.noise->noise_free_fraction()}};
    summary["miou"] = {{"pre_sw", pre.total.miou}, {"post_sw", post.total.miou}};
    summary["precision"] = {{"pre_sw", pre.total.precision.value}, {"post_sw", post.total.precision.value}};
  }

  if (!input.depth.empty()) {
    const GeometryConfig& g = config.geometry;
    const std::size_t start = g.accumulate == GridAccumulation::kAll
                                  ? 0
                                  : std::min(warmup_end(config.pipeline), result.frames - 1);
    result.grid = geom::make_grid(g.grid);
    result.grid_pre = geom::make_grid(g.grid);
    if (!input.ground_truth.empty()) result.grid_ground_truth = geom::make_grid(g.grid);
    for (std::size_t t = 0; t < result.frames; ++t) {
      const auto cloud = obstacle_cloud(outputs[t], input.depth[t], g.intrinsics, g.voxel_leaf);
      const fs::path ply = out_dir / "clouds" / fs::path(input.names[t]).replace_extension(".ply");
      geom::write_ply(ply, cloud);
      if (t < start) continue;
      ++result.grid_frames;
      geom::accumulate_obstacles(*result.grid, cloud, g.extrinsics);
      geom::accumulate_obstacles(*result.grid_pre,
                                 obstacle_cloud(input.masks[t], input.depth[t], g.intrinsics, g.voxel_leaf),
                                 g.extrinsics);
      if (result.grid_ground_truth) {
        geom::accumulate_obstacles(*result.grid_ground_truth,
                                   obstacle_cloud(input.ground_truth[t], input.depth[t], g.intrinsics, g.voxel_leaf),
                                   g.extrinsics);
      }
    }
    geom::write_grid(out_dir / "grid.pgm", out_dir / "grid.json", *result.grid);
    json gs = {{"frames", result.grid_frames},
               {"first_frame", start},
               {"occupied", result.grid->occupied_count()},
               {"occupied_pre_sw", result.grid_pre->occupied_count()}};
    if (result.grid_ground_truth) {
      std::size_t outside = 0, outside_pre = 0;
      for (std::size_t i = 0; i < result.grid->cells.size(); ++i) {
        const bool gt = result.grid_ground_truth->cells[i] == geom::Cell::kOccupied;
        outside += result.grid->cells[i] == geom::Cell::kOccupied && !gt;
        outside_pre += result.grid_pre->cells[i] == geom::Cell::kOccupied && !gt;
      }
      gs["occupied_outside_ground_truth"] = outside;
      gs["occupied_outside_ground_truth_pre_sw"] = outside_pre;
    }
    summary["grid"] = gs;
  }
  write_json(out_dir / "summary.json", summary);

  json manifest;
  manifest["schema_version"] = kManifestSchemaVersion;
  manifest["config"] = to_json(config);
  manifest["inputs"] = input.hashes;
  std::map<std::string, std::string> outputs_hashed;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "manifest.json" || name == "input") continue;
    if (entry.is_directory()) {
      outputs_hashed.merge(hash_tree(entry.path(), out_dir));
    } else if (entry.is_regular_file()) {
      outputs_hashed[name] = sha256_file(entry.path());
    }
  }
  manifest["outputs"] = outputs_hashed;
  write_json(out_dir / "manifest.json", manifest);
  result.manifest = std::move(manifest);
  return result;
}

RunConfig config_from_manifest(const json& manifest) {
  try {
    if (manifest.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw ValidationError("manifest schema_version " + manifest.at("schema_version").dump() + " is not supported");
    }
    RunConfig config = run_config_from_json(manifest.at("config"));
    if (!config.synth) {
      // Real inputs must be byte-identical to what the manifest recorded.
      const auto& recorded = manifest.at("inputs");
      const auto current = load_real_input(config.inputs).hashes;
      if (recorded.size() != current.size()) throw ValidationError("manifest: input file set has changed");
      for (const auto& [key, hash] : current) {
        if (!recorded.contains(key) || recorded.at(key).get<std::string>() != hash) {
          throw ValidationError("manifest: input " + key + " has changed since the recorded run");
        }
      }
    }
    return config;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
}

std::vector<std::string> verify_outputs(const json& manifest, const fs::path& out_dir) {
  std::vector<std::string> bad;
  for (const auto& [rel, hash] : manifest.at("outputs").items()) {
    const fs::path p = out_dir / rel;
    if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) bad.push_back(rel);
  }
  return bad;
}

}  // namespace ascsw::app
