#include "ascsw/config.hpp"

#include <charconv>
#include <fstream>

#include "ascsw/error.hpp"

namespace ascsw {

namespace fs = std::filesystem;
using nlohmann::json;

StructuringElement parse_kernel(const std::string& text) {
  const auto x = text.find_first_of("xX,");
  if (x == std::string::npos) throw ValidationError("kernel must look like MxN, got '" + text + "'");
  StructuringElement se;
  const char* b = text.data();
  auto r1 = std::from_chars(b, b + x, se.rows);
  auto r2 = std::from_chars(b + x + 1, b + text.size(), se.cols);
  if (r1.ec != std::errc{} || r1.ptr != b + x || r2.ec != std::errc{} || r2.ptr != b + text.size() || se.rows < 1 ||
      se.cols < 1) {
    throw ValidationError("kernel must look like MxN with positive M, N, got '" + text + "'");
  }
  return se;
}

std::string format_kernel(StructuringElement se) { return std::to_string(se.rows) + "x" + std::to_string(se.cols); }

KeepMode parse_keep_mode(const std::string& text) {
  if (text == "argmax") return KeepArgmax{};
  const std::string prefix = "fraction:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string num = text.substr(prefix.size());
      const double f = std::stod(num, &used);
      if (used != num.size() || !(f > 0.0 && f <= 1.0)) throw ValidationError("");
      return KeepFraction{f};
    } catch (const std::exception&) {
      throw ValidationError("keep fraction must be in (0, 1], got '" + text + "'");
    }
  }
  throw ValidationError("keep mode must be 'argmax' or 'fraction:F', got '" + text + "'");
}

std::string format_keep_mode(const KeepMode& mode) {
  if (std::holds_alternative<KeepArgmax>(mode)) return "argmax";
  json f = std::get<KeepFraction>(mode).fraction;
  return "fraction:" + f.dump();
}

Morphology parse_morphology(const std::string& text) {
  if (text == "erode") return Morphology::kErode;
  if (text == "dilate") return Morphology::kDilate;
  if (text == "none") return Morphology::kNone;
  throw ValidationError("morphology must be erode, dilate or none, got '" + text + "'");
}

std::string format_morphology(Morphology m) {
  switch (m) {
    case Morphology::kErode:
      return "erode";
    case Morphology::kDilate:
      return "dilate";
    case Morphology::kNone:
      break;
  }
  return "none";
}

json to_json(const PipelineConfig& c) {
  return {{"kernel", {c.se.rows, c.se.cols}},
          {"min_area", c.min_area},
          {"connectivity", static_cast<int>(c.connectivity)},
          {"window", c.window},
          {"dist_threshold", c.dist_threshold},
          {"keep", format_keep_mode(c.keep)},
          {"morphology", format_morphology(c.morphology)}};
}

PipelineConfig pipeline_from_json(const json& j, PipelineConfig c) {
  if (j.contains("kernel")) {
    const auto k = j.at("kernel").get<std::vector<int>>();
    if (k.size() != 2) throw ValidationError("pipeline.kernel must be [rows, cols]");
    c.se = {k[0], k[1]};
  }
  if (j.contains("min_area")) c.min_area = j.at("min_area").get<std::int64_t>();
  if (j.contains("connectivity")) {
    const int conn = j.at("connectivity").get<int>();
    if (conn != 4 && conn != 8) throw ValidationError("connectivity must be 4 or 8");
    c.connectivity = conn == 4 ? Connectivity::kFour : Connectivity::kEight;
  }
  if (j.contains("window")) c.window = j.at("window").get<std::size_t>();
  if (j.contains("dist_threshold")) c.dist_threshold = j.at("dist_threshold").get<double>();
  if (j.contains("keep")) c.keep = parse_keep_mode(j.at("keep").get<std::string>());
  if (j.contains("morphology")) c.morphology = parse_morphology(j.at("morphology").get<std::string>());
  c.validate();
  return c;
}

json to_json(const geom::CameraIntrinsics& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"depth_scale", c.depth_scale}};
}

geom::CameraIntrinsics intrinsics_from_json(const json& j, geom::CameraIntrinsics c) {
  c.fx = j.value("fx", c.fx);
  c.fy = j.value("fy", c.fy);
  c.cx = j.value("cx", c.cx);
  c.cy = j.value("cy", c.cy);
  c.depth_scale = j.value("depth_scale", c.depth_scale);
  c.validate();
  return c;
}

geom::Extrinsics extrinsics_from_json(const json& j) {
  geom::Extrinsics e;
  const auto r = j.at("rotation").get<std::vector<std::vector<double>>>();
  const auto t = j.at("translation").get<std::vector<double>>();
  if (r.size() != 3 || t.size() != 3) throw ValidationError("extrinsics must be a 3x3 rotation and a 3-vector");
  for (int row = 0; row < 3; ++row) {
    if (r[row].size() != 3) throw ValidationError("extrinsics rotation must be 3x3");
    for (int col = 0; col < 3; ++col) e.rotation[3 * row + col] = r[row][col];
  }
  std::copy(t.begin(), t.end(), e.translation.begin());
  e.validate();
  return e;
}

geom::GridSpec grid_from_json(const json& j, geom::GridSpec g) {
  g.resolution = j.value("resolution", g.resolution);
  if (j.contains("origin")) {
    const auto o = j.at("origin").get<std::vector<double>>();
    if (o.size() != 2) throw ValidationError("grid.origin must be [x, y]");
    g.origin_x = o[0];
    g.origin_y = o[1];
  }
  g.width = j.value("width", g.width);
  g.height = j.value("height", g.height);
  if (j.contains("z_band")) {
    const auto z = j.at("z_band").get<std::vector<double>>();
    if (z.size() != 2) throw ValidationError("grid.z_band must be [z_min, z_max]");
    g.z_min = z[0];
    g.z_max = z[1];
  }
  g.min_hits = j.value("min_hits", g.min_hits);
  g.validate();
  return g;
}

json to_json(const geom::Extrinsics& e) {
  const auto& r = e.rotation;
  return {{"rotation", {{r[0], r[1], r[2]}, {r[3], r[4], r[5]}, {r[6], r[7], r[8]}}},
          {"translation", {e.translation[0], e.translation[1], e.translation[2]}}};
}

json to_json(const geom::GridSpec& g) {
  return {{"resolution", g.resolution},
          {"origin", {g.origin_x, g.origin_y}},
          {"width", g.width},
          {"height", g.height},
          {"z_band", {g.z_min, g.z_max}},
          {"min_hits", g.min_hits}};
}

json to_json(const GeometryConfig& g) {
  return {{"intrinsics", to_json(g.intrinsics)},
          {"extrinsics", to_json(g.extrinsics)},
          {"voxel_leaf", g.voxel_leaf},
          {"grid", to_json(g.grid)},
          {"accumulate", g.accumulate == GridAccumulation::kAll ? "all" : "after_warmup"}};
}

GeometryConfig geometry_from_json(const json& j, GeometryConfig g) {
  if (j.contains("intrinsics")) g.intrinsics = intrinsics_from_json(j.at("intrinsics"), g.intrinsics);
  if (j.contains("extrinsics")) g.extrinsics = extrinsics_from_json(j.at("extrinsics"));
  g.voxel_leaf = j.value("voxel_leaf", g.voxel_leaf);
  if (!(g.voxel_leaf > 0.0)) throw ValidationError("geometry.voxel_leaf must be > 0");
  if (j.contains("grid")) g.grid = grid_from_json(j.at("grid"), g.grid);
  if (j.contains("accumulate")) {
    const auto a = j.at("accumulate").get<std::string>();
    if (a == "all") {
      g.accumulate = GridAccumulation::kAll;
    } else if (a == "after_warmup") {
      g.accumulate = GridAccumulation::kAfterWarmup;
    } else {
      throw ValidationError("geometry.accumulate must be 'all' or 'after_warmup'");
    }
  }
  return g;
}

json to_json(const synth::SynthConfig& c) {
  json pts = json::array();
  for (const auto& p : c.dlo.points) pts.push_back({p.x, p.y});
  return {{"frames", c.frames},
          {"width", c.width},
          {"height", c.height},
          {"seed", c.seed},
          {"max_drift", c.max_drift},
          {"dlo", {{"points", pts}, {"thickness", c.dlo.thickness}, {"drift", {c.dlo.drift.x, c.dlo.drift.y}}}},
          {"noise",
           {{"count", c.noise.count},
            {"size_range", {c.noise.size_min, c.noise.size_max}},
            {"flicker_p", c.noise.flicker_p},
            {"clearance", c.noise.clearance}}},
          {"depth",
           {{"enabled", c.depth.enabled},
            {"intrinsics", to_json(c.depth.intrinsics)},
            {"camera_height", c.depth.camera_height},
            {"dlo_height", c.depth.dlo_height},
            {"noise_height", c.depth.noise_height}}}};
}

synth::SynthConfig synth_from_json(const json& j, synth::SynthConfig c) {
  c.frames = j.value("frames", c.frames);
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.seed = j.value("seed", c.seed);
  c.max_drift = j.value("max_drift", c.max_drift);
  if (j.contains("dlo")) {
    const json& d = j.at("dlo");
    if (d.contains("points")) {
      c.dlo.points.clear();
      for (const auto& p : d.at("points")) c.dlo.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    c.dlo.thickness = d.value("thickness", c.dlo.thickness);
    if (d.contains("drift")) c.dlo.drift = {d.at("drift").at(0).get<double>(), d.at("drift").at(1).get<double>()};
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    c.noise.count = n.value("count", c.noise.count);
    if (n.contains("size_range")) {
      c.noise.size_min = n.at("size_range").at(0).get<int>();
      c.noise.size_max = n.at("size_range").at(1).get<int>();
    }
    c.noise.flicker_p = n.value("flicker_p", c.noise.flicker_p);
    c.noise.clearance = n.value("clearance", c.noise.clearance);
  }
  if (j.contains("depth")) {
    const json& d = j.at("depth");
    c.depth.enabled = d.value("enabled", c.depth.enabled);
    if (d.contains("intrinsics")) c.depth.intrinsics = intrinsics_from_json(d.at("intrinsics"), c.depth.intrinsics);
    c.depth.camera_height = d.value("camera_height", c.depth.camera_height);
    c.depth.dlo_height = d.value("dlo_height", c.depth.dlo_height);
    c.depth.noise_height = d.value("noise_height", c.depth.noise_height);
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  pipeline.validate();
  geometry.intrinsics.validate();
  geometry.extrinsics.validate();
  geometry.grid.validate();
  if (!(geometry.voxel_leaf > 0.0)) throw ValidationError("voxel_leaf must be > 0");
  if (synth) {
    synth->validate();
  } else {
    if (inputs.masks.empty()) throw ValidationError("run: no synthetic config and no mask directory");
    if (!fs::is_directory(inputs.masks)) throw IoError("run: mask directory does not exist: " + inputs.masks.string());
    if (!inputs.depth.empty() && !fs::is_directory(inputs.depth)) {
      throw IoError("run: depth directory does not exist: " + inputs.depth.string());
    }
    if (!inputs.ground_truth.empty() && !fs::is_directory(inputs.ground_truth)) {
      throw IoError("run: ground-truth directory does not exist: " + inputs.ground_truth.string());
    }
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["pipeline"] = to_json(c.pipeline);
  j["geometry"] = to_json(c.geometry);
  j["synth"] = c.synth ? to_json(*c.synth) : json(nullptr);
  j["inputs"] = {{"masks", c.inputs.masks.string()},
                 {"depth", c.inputs.depth.string()},
                 {"ground_truth", c.inputs.ground_truth.string()}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw ValidationError("config schema_version " + j.at("schema_version").dump() + " is not supported");
    }
    RunConfig c;
    if (j.contains("pipeline")) c.pipeline = pipeline_from_json(j.at("pipeline"));
    if (j.contains("geometry")) c.geometry = geometry_from_json(j.at("geometry"));
    if (j.contains("synth") && !j.at("synth").is_null()) c.synth = synth_from_json(j.at("synth"));
    if (j.contains("inputs")) {
      const json& in = j.at("inputs");
      c.inputs.masks = in.value("masks", "");
      c.inputs.depth = in.value("depth", "");
      c.inputs.ground_truth = in.value("ground_truth", "");
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ascsw
