#pragma once

#include <cstdint>
#include <vector>

#include "ascsw/geometry.hpp"
#include "ascsw/mask_ops.hpp"

namespace ascsw::synth {

/// Thick polyline translated by `drift` pixels every frame.
struct DloSpec {
  std::vector<Point2> points{{80, 100}, {220, 180}, {380, 240}, {520, 330}};
  double thickness = 7.0;
  Point2 drift{0.8, 0.6};
};

/// Static false-positive regions (rectangles and short line segments) that
/// each appear in a frame with probability `flicker_p`.
struct NoiseSpec {
  int count = 3;
  int size_min = 12;
  int size_max = 40;
  double flicker_p = 0.3;
  /// Minimum gap in pixels between a noise region and the swept DLO or
  /// another noise region.
  int clearance = 8;
};

/// Downward-looking camera over a flat floor.
struct DepthSpec {
  bool enabled = false;
  geom::CameraIntrinsics intrinsics{525.0, 525.0, 319.5, 239.5, 0.001};
  double camera_height = 1.0;  // metres
  double dlo_height = 0.012;
  double noise_height = 0.04;
};

struct SynthConfig {
  int frames = 90;
  int width = 640;
  int height = 480;
  DloSpec dlo;
  NoiseSpec noise;
  DepthSpec depth;
  std::uint64_t seed = 1;
  /// Per-frame drift must stay below this so the DLO keeps one track.
  double max_drift = 50.0;

  void validate() const;
};

struct NoiseRegion {
  enum class Shape { kRectangle, kSegment } shape;
  BinaryMask pixels;
};

struct SynthSequence {
  std::vector<BinaryMask> input;         // DLO plus whichever noise regions fired
  std::vector<BinaryMask> ground_truth;  // DLO only
  std::vector<geom::DepthFrame> depth;   // empty unless depth.enabled
  std::vector<NoiseRegion> noise_regions;
  std::vector<std::vector<bool>> noise_present;  // [frame][region]
};

/// Deterministic for a given config (including seed). Throws
/// ValidationError when the DLO leaves the frame or noise cannot be placed.
SynthSequence generate(const SynthConfig& cfg);

/// Camera-to-ground transform matching DepthSpec: ground z up, camera at
/// (0, 0, camera_height) looking straight down.
geom::Extrinsics downward_camera(const DepthSpec& spec);

/// Rasterized DLO for frame `t`.
BinaryMask draw_dlo(const SynthConfig& cfg, int t);

}  // namespace ascsw::synth
