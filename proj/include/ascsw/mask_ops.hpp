#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ascsw {

/// Per-frame foreground/background bitmap, row-major, one byte per pixel
/// holding exactly 0 (background) or 1 (foreground).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  /// Any nonzero byte in `values` is taken as foreground.
  BinaryMask(int width, int height, std::span<const std::uint8_t> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool at(int x, int y) const { return data_[index(x, y)] != 0; }
  void set(int x, int y, bool fg) { data_[index(x, y)] = fg ? 1 : 0; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::size_t count() const noexcept;
  BinaryMask complement() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// All-ones rectangle of `rows` x `cols` pixels. The anchor sits at
/// ((rows-1)/2, (cols-1)/2), so even sizes anchor at floor(center).
struct StructuringElement {
  int rows = 1;
  int cols = 1;

  int anchor_row() const noexcept { return (rows - 1) / 2; }
  int anchor_col() const noexcept { return (cols - 1) / 2; }
};

enum class Connectivity : int { kFour = 4, kEight = 8 };

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct RegionStats {
  int label = 0;
  std::int64_t area = 0;
  Point2 centroid;
  // Inclusive bounding box.
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;

  bool operator==(const RegionStats&) const = default;
};

/// Row-major region labels, 0 = background, 1..R dense.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;

  std::int32_t at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
  bool operator==(const LabelMap&) const = default;
};

struct Labeling {
  LabelMap map;
  std::vector<RegionStats> regions;
};

/// Output pixel is foreground iff every pixel under the footprint is
/// foreground. Out-of-bounds pixels count as background.
/// Throws EmptyInputError for a zero-sized mask and ValidationError when the
/// element is larger than the mask.
BinaryMask erode(const BinaryMask& mask, StructuringElement se);

/// Output pixel is foreground iff any pixel under the footprint is foreground.
BinaryMask dilate(const BinaryMask& mask, StructuringElement se);

enum class Morphology { kErode, kDilate, kNone };

BinaryMask apply_morphology(const BinaryMask& mask, StructuringElement se, Morphology op);

/// Connected-component labeling. Labels are assigned in raster order of each
/// component's first pixel; regions[i].label == i + 1.
Labeling label_regions(const BinaryMask& mask, Connectivity connectivity = Connectivity::kEight);

/// Keeps regions with area strictly greater than `min_area`, order preserved.
std::vector<RegionStats> filter_by_area(std::span<const RegionStats> regions, std::int64_t min_area);

namespace reference {

// Serial footprint-scan morphology. The public erode/dilate use a separable
// OpenMP kernel; these are kept for tests and benchmarks.
BinaryMask erode(const BinaryMask& mask, StructuringElement se);
BinaryMask dilate(const BinaryMask& mask, StructuringElement se);

}  // namespace reference

}  // namespace ascsw
