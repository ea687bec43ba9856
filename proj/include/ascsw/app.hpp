#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ascsw/config.hpp"
#include "ascsw/geometry.hpp"
#include "ascsw/metrics.hpp"
#include "ascsw/synth.hpp"
#include "ascsw/tracker.hpp"

namespace ascsw::app {

/// One JSON object (no trailing newline): frame index, file name, region
/// count, assigned IDs, kept IDs and window vote counts.
std::string frame_log_line(const FrameResult& result, const std::string& name);

struct PostprocessSummary {
  std::size_t frames = 0;
  std::vector<std::string> names;
};

/// Masks from `in_dir` in lexicographic order; outputs keep the input file
/// names. The log gets one line per frame.
PostprocessSummary postprocess_directory(const PipelineConfig& config, const std::filesystem::path& in_dir,
                                         const std::filesystem::path& out_dir, const std::filesystem::path& log_path);

/// Frames from a length-prefixed stream; outputs are frame_NNNNNN.pgm.
PostprocessSummary postprocess_stream(const PipelineConfig& config, std::istream& in,
                                      const std::filesystem::path& out_dir, const std::filesystem::path& log_path);

std::string frame_name(std::size_t index);

/// masks/, gt/, depth/ (when generated), synth.json, intrinsics.json,
/// extrinsics.json under `out_dir`.
void write_synth_dataset(const synth::SynthConfig& cfg, const synth::SynthSequence& seq,
                         const std::filesystem::path& out_dir);

/// backproject then voxel_downsample.
geom::PointCloud obstacle_cloud(const BinaryMask& mask, const geom::DepthFrame& depth,
                                const geom::CameraIntrinsics& intr, double leaf);

struct NoiseStats {
  std::size_t post_warmup_frames = 0;
  std::size_t noise_free_frames = 0;  // post-warm-up outputs with no noise pixel
  double noise_free_fraction() const {
    return post_warmup_frames == 0 ? 1.0 : static_cast<double>(noise_free_frames) / post_warmup_frames;
  }
};

/// First frame index whose vote window is full.
std::size_t warmup_end(const PipelineConfig& config);

/// Noise pixels = input foreground outside the ground truth.
NoiseStats noise_stats(const std::vector<BinaryMask>& input, const std::vector<BinaryMask>& ground_truth,
                       const std::vector<BinaryMask>& output, std::size_t warmup_end);

struct RunResult {
  std::size_t frames = 0;
  std::optional<metrics::MetricsReport> pre;
  std::optional<metrics::MetricsReport> post;
  std::optional<NoiseStats> noise;
  std::optional<geom::OccupancyGrid> grid;
  std::optional<geom::OccupancyGrid> grid_pre;          // same frames, raw masks
  std::optional<geom::OccupancyGrid> grid_ground_truth;  // same frames, ground truth
  std::size_t grid_frames = 0;
  nlohmann::json manifest;
};

/// Whole chain: (synthesize) -> postprocess -> eval -> clouds -> grid, all
/// written under `out_dir`, finishing with out_dir/manifest.json.
RunResult run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir);

inline constexpr int kManifestSchemaVersion = 1;

RunConfig config_from_manifest(const nlohmann::json& manifest);

/// Paths (relative to the run directory) whose SHA-256 differs from, or is
/// missing relative to, the manifest's "outputs" map.
std::vector<std::string> verify_outputs(const nlohmann::json& manifest, const std::filesystem::path& out_dir);

/// Hex SHA-256 of every regular file under `dir`, keyed by path relative to
/// `base`, in sorted order.
std::map<std::string, std::string> hash_tree(const std::filesystem::path& dir, const std::filesystem::path& base);

}  // namespace ascsw::app
