#include "ascsw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ascsw/error.hpp"
#include "ascsw/image_io.hpp"

namespace ascsw::geom {

namespace fs = std::filesystem;
using nlohmann::json;

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: fx and fy must be > 0");
  if (!(depth_scale > 0.0)) throw ValidationError("intrinsics: depth_scale must be > 0");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw ValidationError("intrinsics: principal point must be finite");
}

PointCloud backproject(const DepthFrame& depth, const CameraIntrinsics& intr, const BinaryMask& mask) {
  intr.validate();
  if (depth.width != mask.width() || depth.height != mask.height()) {
    throw ValidationError("backproject: depth is " + std::to_string(depth.width) + "x" + std::to_string(depth.height) +
                          ", mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
  }
  PointCloud cloud;
  const auto px = mask.data();
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * depth.width + u;
      if (!px[i]) continue;
      const std::uint16_t raw = depth.data[i];
      if (raw == 0) continue;
      const double z = raw * intr.depth_scale;
      cloud.push_back({(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z});
    }
  }
  return cloud;
}

PixelDepth project(const Point3& p, const CameraIntrinsics& intr) {
  return {intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy, p.z};
}

VoxelIndex voxel_of(const Point3& p, double leaf) {
  return {static_cast<std::int64_t>(std::floor(p.x / leaf)), static_cast<std::int64_t>(std::floor(p.y / leaf)),
          static_cast<std::int64_t>(std::floor(p.z / leaf))};
}

namespace {

// Moves `value` toward the voxel [index, index + 1) * leaf one ulp at a time
// until floor(value / leaf) == index.
double clamp_into_voxel(double value, std::int64_t index, double leaf) {
  for (int guard = 0; guard < 64; ++guard) {
    const auto got = static_cast<std::int64_t>(std::floor(value / leaf));
    if (got == index) return value;
    value = std::nextafter(value, got < index ? INFINITY : -INFINITY);
  }
  return value;
}

}  // namespace

PointCloud voxel_downsample(std::span<const Point3> cloud, double leaf) {
  if (!(leaf > 0.0)) throw ValidationError("voxel leaf must be > 0");
  struct Sum {
    double x = 0, y = 0, z = 0;
    std::size_t n = 0;
  };
  std::map<VoxelIndex, Sum> buckets;
  for (const Point3& p : cloud) {
    Sum& s = buckets[voxel_of(p, leaf)];
    s.x += p.x;
    s.y += p.y;
    s.z += p.z;
    ++s.n;
  }
  PointCloud out;
  out.reserve(buckets.size());
  for (const auto& [idx, s] : buckets) {
    const double n = static_cast<double>(s.n);
    out.push_back({clamp_into_voxel(s.x / n, idx.ix, leaf), clamp_into_voxel(s.y / n, idx.iy, leaf),
                   clamp_into_voxel(s.z / n, idx.iz, leaf)});
  }
  return out;
}

Point3 Extrinsics::apply(const Point3& p) const {
  const auto& r = rotation;
  return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation[0], r[3] * p.x + r[4] * p.y + r[5] * p.z + translation[1],
          r[6] * p.x + r[7] * p.y + r[8] * p.z + translation[2]};
}

void Extrinsics::validate() const {
  const auto& r = rotation;
  for (double v : r)
    if (!std::isfinite(v)) throw ValidationError("extrinsics: rotation must be finite");
  for (double v : translation)
    if (!std::isfinite(v)) throw ValidationError("extrinsics: translation must be finite");
  const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                     r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (std::abs(det) < 1e-9) throw ValidationError("extrinsics: rotation is singular");
  if (std::abs(det - 1.0) > 1e-6) throw ValidationError("extrinsics: rotation determinant is not +1");
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += r[3 * k + a] * r[3 * k + b];
      if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-6) throw ValidationError("extrinsics: rotation is not orthonormal");
    }
  }
}

void GridSpec::validate() const {
  if (!(resolution > 0.0)) throw ValidationError("grid resolution must be > 0");
  if (width < 1 || height < 1) throw ValidationError("grid dimensions must be >= 1");
  if (!(z_min <= z_max)) throw ValidationError("grid z band must satisfy z_min <= z_max");
  if (min_hits < 1) throw ValidationError("grid min_hits must be >= 1");
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), Cell::kOccupied));
}

OccupancyGrid make_grid(const GridSpec& spec) {
  spec.validate();
  OccupancyGrid grid;
  grid.spec = spec;
  const std::size_t n = static_cast<std::size_t>(spec.width) * spec.height;
  grid.cells.assign(n, Cell::kFree);
  grid.hits.assign(n, 0);
  return grid;
}

void accumulate_obstacles(OccupancyGrid& grid, std::span<const Point3> cloud, const Extrinsics& extrinsics) {
  extrinsics.validate();
  const GridSpec& s = grid.spec;
  for (const Point3& pc : cloud) {
    const Point3 p = extrinsics.apply(pc);
    if (p.z < s.z_min || p.z > s.z_max) continue;
    ++grid.in_band;
    const double fx = std::floor((p.x - s.origin_x) / s.resolution);
    const double fy = std::floor((p.y - s.origin_y) / s.resolution);
    if (fx < 0 || fy < 0 || fx >= s.width || fy >= s.height) {
      ++grid.out_of_bounds;
      continue;
    }
    const std::size_t i = static_cast<std::size_t>(fy) * s.width + static_cast<std::size_t>(fx);
    ++grid.hits[i];
  }
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    grid.cells[i] = grid.hits[i] >= static_cast<std::uint32_t>(s.min_hits) ? Cell::kOccupied : Cell::kFree;
  }
}

OccupancyGrid rasterize_obstacles(std::span<const Point3> cloud, const GridSpec& spec, const Extrinsics& extrinsics) {
  OccupancyGrid grid = make_grid(spec);
  accumulate_obstacles(grid, cloud, extrinsics);
  return grid;
}

DepthFrame read_depth_pgm(const fs::path& path) {
  Gray16 img = read_pgm16(path);
  return {img.width, img.height, std::move(img.pixels)};
}

void write_depth_pgm(const fs::path& path, const DepthFrame& depth) {
  write_pgm16(path, Gray16{depth.width, depth.height, depth.data});
}

void write_ply(const fs::path& path, std::span<const Point3> cloud) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char buf[96];
  for (const Point3& p : cloud) {
    const int n = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", static_cast<float>(p.x), static_cast<float>(p.y),
                                static_cast<float>(p.z));
    out.write(buf, n);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

PointCloud read_ply(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw IoError(path.string() + ": not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  std::vector<bool> single;  // declared float: round values to float precision
  bool in_vertex = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw IoError(path.string() + ": only ASCII PLY is supported");
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
      single.push_back(type == "float" || type == "float32");
    } else if (word == "end_header") {
      break;
    }
  }
  const auto find = [&](const char* name) {
    auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end()) throw IoError(path.string() + ": vertex property '" + name + "' missing");
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t ix = find("x"), iy = find("y"), iz = find("z");
  PointCloud cloud;
  cloud.reserve(count);
  std::vector<double> row(props.size());
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t p = 0; p < row.size(); ++p) {
      if (!(in >> row[p])) throw IoError(path.string() + ": truncated vertex list");
      if (single[p]) row[p] = static_cast<float>(row[p]);
    }
    cloud.push_back({row[ix], row[iy], row[iz]});
  }
  return cloud;
}

void write_grid(const fs::path& pgm_path, const fs::path& json_path, const OccupancyGrid& grid) {
  const GridSpec& s = grid.spec;
  Gray8 img{s.width, s.height, std::vector<std::uint8_t>(grid.cells.size())};
  for (int iy = 0; iy < s.height; ++iy) {
    const int row = s.height - 1 - iy;
    for (int ix = 0; ix < s.width; ++ix) {
      img.pixels[static_cast<std::size_t>(row) * s.width + ix] = grid.at(ix, iy) == Cell::kOccupied ? 0 : 254;
    }
  }
  write_pgm8(pgm_path, img);

  json j;
  j["image"] = pgm_path.filename().string();
  j["resolution"] = s.resolution;
  j["origin"] = {s.origin_x, s.origin_y};
  j["width"] = s.width;
  j["height"] = s.height;
  j["z_band"] = {s.z_min, s.z_max};
  j["min_hits"] = s.min_hits;
  j["occupied_value"] = 0;
  j["free_value"] = 254;
  j["occupied_cells"] = grid.occupied_count();
  j["in_band_points"] = grid.in_band;
  j["out_of_bounds_points"] = grid.out_of_bounds;
  if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ascsw::geom
