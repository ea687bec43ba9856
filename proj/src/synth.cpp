#include "ascsw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ascsw/error.hpp"

namespace ascsw::synth {

namespace {

// Portable draws from a fixed engine; std distributions are not guaranteed
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }
  bool bernoulli(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

double segment_distance2(double px, double py, Point2 a, Point2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return dx * dx + dy * dy;
}

void draw_segment(BinaryMask& mask, Point2 a, Point2 b, double thickness) {
  const double r = thickness / 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r)));
  const int x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r)));
  const int y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (segment_distance2(x, y, a, b) <= r * r) mask.set(x, y, true);
}

bool intersects(const BinaryMask& a, const BinaryMask& b) {
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i)
    if (da[i] & db[i]) return true;
  return false;
}

void merge_into(BinaryMask& dst, const BinaryMask& src) {
  auto d = dst.data();
  const auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] |= s[i];
}

// Pixels within `gap` (Chebyshev) of `mask`.
BinaryMask grow(const BinaryMask& mask, int gap) {
  const int side = 2 * gap + 1;
  if (side > mask.width() || side > mask.height()) return BinaryMask(mask.width(), mask.height(), true);
  return dilate(mask, {side, side});
}

std::uint16_t depth_units(double metres, double scale) {
  return static_cast<std::uint16_t>(std::clamp(std::lround(metres / scale), 0L, 65535L));
}

}  // namespace

void SynthConfig::validate() const {
  if (frames < 1) throw ValidationError("synth: frames must be >= 1");
  if (width < 8 || height < 8) throw ValidationError("synth: frame must be at least 8x8");
  if (dlo.points.size() < 2) throw ValidationError("synth: DLO polyline needs at least two points");
  if (!(dlo.thickness > 0.0)) throw ValidationError("synth: DLO thickness must be > 0");
  if (!(std::hypot(dlo.drift.x, dlo.drift.y) < max_drift)) {
    throw ValidationError("synth: per-frame drift must be below the tracker distance threshold");
  }
  if (noise.count < 0) throw ValidationError("synth: noise count must be >= 0");
  if (noise.size_min < 1 || noise.size_max < noise.size_min) throw ValidationError("synth: bad noise size range");
  if (!(noise.flicker_p >= 0.0 && noise.flicker_p <= 1.0)) throw ValidationError("synth: flicker p must be in [0, 1]");
  if (noise.clearance < 0) throw ValidationError("synth: clearance must be >= 0");
  if (depth.enabled) {
    depth.intrinsics.validate();
    if (!(depth.camera_height > depth.dlo_height) || !(depth.camera_height > depth.noise_height)) {
      throw ValidationError("synth: camera must sit above the objects it sees");
    }
  }
  // The DLO moves linearly, so checking the first and last frames covers all.
  const double r = dlo.thickness / 2.0;
  for (int t : {0, frames - 1}) {
    for (const Point2& p : dlo.points) {
      const double x = p.x + dlo.drift.x * t;
      const double y = p.y + dlo.drift.y * t;
      if (x - r < 0 || y - r < 0 || x + r > width - 1 || y + r > height - 1) {
        throw ValidationError("synth: DLO polyline leaves the frame at frame " + std::to_string(t));
      }
    }
  }
}

BinaryMask draw_dlo(const SynthConfig& cfg, int t) {
  BinaryMask mask(cfg.width, cfg.height);
  const Point2 shift{cfg.dlo.drift.x * t, cfg.dlo.drift.y * t};
  for (std::size_t i = 0; i + 1 < cfg.dlo.points.size(); ++i) {
    const Point2 a{cfg.dlo.points[i].x + shift.x, cfg.dlo.points[i].y + shift.y};
    const Point2 b{cfg.dlo.points[i + 1].x + shift.x, cfg.dlo.points[i + 1].y + shift.y};
    draw_segment(mask, a, b, cfg.dlo.thickness);
  }
  return mask;
}

geom::Extrinsics downward_camera(const DepthSpec& spec) {
  geom::Extrinsics e;
  e.rotation = {1, 0, 0, 0, -1, 0, 0, 0, -1};
  e.translation = {0, 0, spec.camera_height};
  return e;
}

SynthSequence generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  SynthSequence seq;

  for (int t = 0; t < cfg.frames; ++t) seq.ground_truth.push_back(draw_dlo(cfg, t));

  BinaryMask occupied(cfg.width, cfg.height);
  for (const auto& gt : seq.ground_truth) merge_into(occupied, gt);
  BinaryMask keep_out = grow(occupied, cfg.noise.clearance);

  constexpr int kMaxAttempts = 2000;
  for (int n = 0; n < cfg.noise.count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      NoiseRegion region{rng.bernoulli(0.5) ? NoiseRegion::Shape::kSegment : NoiseRegion::Shape::kRectangle,
                         BinaryMask(cfg.width, cfg.height)};
      if (region.shape == NoiseRegion::Shape::kRectangle) {
        const int w = rng.uniform_int(cfg.noise.size_min, cfg.noise.size_max);
        const int h = rng.uniform_int(cfg.noise.size_min, cfg.noise.size_max);
        if (w >= cfg.width - 2 || h >= cfg.height - 2) continue;
        const int x0 = rng.uniform_int(1, cfg.width - w - 1);
        const int y0 = rng.uniform_int(1, cfg.height - h - 1);
        for (int y = y0; y < y0 + h; ++y)
          for (int x = x0; x < x0 + w; ++x) region.pixels.set(x, y, true);
      } else {
        // Thin line-like segment, mimicking baseboard-style false positives.
        const double length = rng.uniform(2.0 * cfg.noise.size_min, 2.0 * cfg.noise.size_max);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double thickness = rng.uniform(3.0, 5.0);
        const double margin = length / 2.0 + thickness;
        if (2 * margin >= std::min(cfg.width, cfg.height)) continue;
        const Point2 c{rng.uniform(margin, cfg.width - 1 - margin), rng.uniform(margin, cfg.height - 1 - margin)};
        const Point2 d{std::cos(angle) * length / 2.0, std::sin(angle) * length / 2.0};
        draw_segment(region.pixels, {c.x - d.x, c.y - d.y}, {c.x + d.x, c.y + d.y}, thickness);
      }
      if (region.pixels.count() == 0 || intersects(region.pixels, keep_out)) continue;
      merge_into(keep_out, grow(region.pixels, cfg.noise.clearance));
      seq.noise_regions.push_back(std::move(region));
      placed = true;
    }
    if (!placed) throw ValidationError("synth: could not place noise region " + std::to_string(n));
  }

  for (int t = 0; t < cfg.frames; ++t) {
    BinaryMask frame = seq.ground_truth[static_cast<std::size_t>(t)];
    std::vector<bool> present(seq.noise_regions.size());
    for (std::size_t r = 0; r < seq.noise_regions.size(); ++r) {
      present[r] = rng.bernoulli(cfg.noise.flicker_p);
      if (present[r]) merge_into(frame, seq.noise_regions[r].pixels);
    }
    seq.input.push_back(std::move(frame));
    seq.noise_present.push_back(std::move(present));
  }

  if (cfg.depth.enabled) {
    const double scale = cfg.depth.intrinsics.depth_scale;
    const std::uint16_t floor_raw = depth_units(cfg.depth.camera_height, scale);
    const std::uint16_t dlo_raw = depth_units(cfg.depth.camera_height - cfg.depth.dlo_height, scale);
    const std::uint16_t noise_raw = depth_units(cfg.depth.camera_height - cfg.depth.noise_height, scale);
    BinaryMask all_noise(cfg.width, cfg.height);
    for (const auto& r : seq.noise_regions) merge_into(all_noise, r.pixels);
    const auto noise_px = all_noise.data();
    for (int t = 0; t < cfg.frames; ++t) {
      geom::DepthFrame d{cfg.width, cfg.height, std::vector<std::uint16_t>(static_cast<std::size_t>(cfg.width) * cfg.height, floor_raw)};
      // Noise objects are physically present every frame; only the
      // segmentation flickers.
      const auto dlo_px = seq.ground_truth[static_cast<std::size_t>(t)].data();
      for (std::size_t i = 0; i < d.data.size(); ++i) {
        if (noise_px[i]) d.data[i] = noise_raw;
        if (dlo_px[i]) d.data[i] = dlo_raw;
      }
      seq.depth.push_back(std::move(d));
    }
  }
  return seq;
}

}  // namespace ascsw::synth
