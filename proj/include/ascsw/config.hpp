#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ascsw/geometry.hpp"
#include "ascsw/synth.hpp"
#include "ascsw/tracker.hpp"

namespace ascsw {

/// Which frames of a sequence feed the occupancy grid.
enum class GridAccumulation {
  kAfterWarmup,  // frames whose vote window is full (last frame if none is)
  kAll,
};

struct GeometryConfig {
  geom::CameraIntrinsics intrinsics{525.0, 525.0, 319.5, 239.5, 0.001};
  geom::Extrinsics extrinsics;
  double voxel_leaf = 0.05;
  geom::GridSpec grid{0.05, -0.8, -0.6, 32, 24, 0.005, 0.30, 1};
  GridAccumulation accumulate = GridAccumulation::kAfterWarmup;
};

struct InputPaths {
  std::filesystem::path masks;
  std::filesystem::path depth;
  std::filesystem::path ground_truth;  // optional
};

/// Everything `run` needs; serialized as one JSON document and embedded in
/// the run manifest.
struct RunConfig {
  PipelineConfig pipeline;
  GeometryConfig geometry;
  std::optional<synth::SynthConfig> synth;  // set -> generate input
  InputPaths inputs;                        // used when synth is unset

  void validate() const;
};

inline constexpr int kConfigSchemaVersion = 1;

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_from_json(const nlohmann::json& j, PipelineConfig base = {});

nlohmann::json to_json(const synth::SynthConfig& c);
synth::SynthConfig synth_from_json(const nlohmann::json& j, synth::SynthConfig base = {});

nlohmann::json to_json(const geom::CameraIntrinsics& c);
geom::CameraIntrinsics intrinsics_from_json(const nlohmann::json& j, geom::CameraIntrinsics base = {});
geom::Extrinsics extrinsics_from_json(const nlohmann::json& j);
geom::GridSpec grid_from_json(const nlohmann::json& j, geom::GridSpec base);
nlohmann::json to_json(const geom::Extrinsics& e);
nlohmann::json to_json(const geom::GridSpec& g);
nlohmann::json to_json(const GeometryConfig& g);
GeometryConfig geometry_from_json(const nlohmann::json& j, GeometryConfig base = {});

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Throws IoError / ValidationError.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// "3x5" -> {rows 3, cols 5}; "argmax" / "fraction:0.6"; "erode" | "dilate" | "none".
StructuringElement parse_kernel(const std::string& text);
KeepMode parse_keep_mode(const std::string& text);
Morphology parse_morphology(const std::string& text);
std::string format_kernel(StructuringElement se);
std::string format_keep_mode(const KeepMode& mode);
std::string format_morphology(Morphology m);

}  // namespace ascsw
