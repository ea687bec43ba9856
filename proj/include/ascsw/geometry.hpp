#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ascsw/mask_ops.hpp"

namespace ascsw::geom {

/// Pinhole intrinsics. Camera frame: x right, y down, z forward.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double depth_scale = 0.001;  // metres per raw depth unit

  void validate() const;
};

/// Raw 16-bit depth, row-major; 0 = no return.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;

  std::uint16_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Point3&) const = default;
};

using PointCloud = std::vector<Point3>;

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// One point per foreground pixel with nonzero raw depth, in raster order.
/// Throws ValidationError if the depth and mask sizes differ.
PointCloud backproject(const DepthFrame& depth, const CameraIntrinsics& intr, const BinaryMask& mask);

/// Forward pinhole model; inverse of backproject for z > 0.
PixelDepth project(const Point3& p, const CameraIntrinsics& intr);

struct VoxelIndex {
  std::int64_t ix = 0, iy = 0, iz = 0;
  auto operator<=>(const VoxelIndex&) const = default;
};

/// Voxel containing `p` with half-open floor indexing (boundary points go to
/// the higher index; negatives use true floor).
VoxelIndex voxel_of(const Point3& p, double leaf);

/// One centroid per occupied cubic voxel of edge `leaf`, ordered by
/// ascending (ix, iy, iz). Each centroid is nudged, if rounding put it
/// outside, back into its own voxel so the filter is idempotent.
PointCloud voxel_downsample(std::span<const Point3> cloud, double leaf);

/// Camera-to-ground rigid transform: p_ground = R * p_cam + t, ground z up.
struct Extrinsics {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation{0, 0, 0};

  Point3 apply(const Point3& p) const;
  /// Throws ValidationError unless `rotation` is a proper rotation
  /// (orthonormal within 1e-6, determinant +1).
  void validate() const;
};

struct GridSpec {
  double resolution = 0.05;  // metres per cell
  double origin_x = 0.0;     // corner of cell (0, 0)
  double origin_y = 0.0;
  int width = 0;  // cells
  int height = 0;
  double z_min = 0.005;  // obstacle height band, inclusive
  double z_max = 0.30;
  int min_hits = 1;

  void validate() const;
};

enum class Cell : std::uint8_t { kFree = 0, kOccupied = 1 };

struct OccupancyGrid {
  GridSpec spec;
  std::vector<Cell> cells;          // row-major, row = y index
  std::vector<std::uint32_t> hits;  // in-band points per cell
  std::size_t out_of_bounds = 0;    // in-band points outside the grid
  std::size_t in_band = 0;

  Cell at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * spec.width + ix]; }
  std::size_t occupied_count() const;
};

/// Empty (all free) grid for `spec`.
OccupancyGrid make_grid(const GridSpec& spec);

/// Adds the in-band points of `cloud` (after transforming to the ground
/// frame) to `grid` and re-derives occupancy from hit counts.
void accumulate_obstacles(OccupancyGrid& grid, std::span<const Point3> cloud, const Extrinsics& extrinsics);

OccupancyGrid rasterize_obstacles(std::span<const Point3> cloud, const GridSpec& spec, const Extrinsics& extrinsics);

// File formats.
DepthFrame read_depth_pgm(const std::filesystem::path& path);
void write_depth_pgm(const std::filesystem::path& path, const DepthFrame& depth);

/// ASCII PLY with float x, y, z vertex properties.
void write_ply(const std::filesystem::path& path, std::span<const Point3> cloud);
PointCloud read_ply(const std::filesystem::path& path);

/// 8-bit PGM (0 = occupied, 254 = free), row 0 of the image is the grid's
/// highest y row, plus a JSON sidecar with resolution, origin and z band.
void write_grid(const std::filesystem::path& pgm_path, const std::filesystem::path& json_path,
                const OccupancyGrid& grid);

}  // namespace ascsw::geom
