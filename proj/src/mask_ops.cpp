#include "ascsw/mask_ops.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ascsw/error.hpp"

namespace ascsw {

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("mask dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

BinaryMask::BinaryMask(int width, int height, std::span<const std::uint8_t> values)
    : BinaryMask(width, height) {
  if (values.size() != data_.size()) {
    throw ValidationError("mask data length " + std::to_string(values.size()) + " != " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  std::transform(values.begin(), values.end(), data_.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v != 0 ? 1 : 0; });
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& v : out.data_) v = v ? 0 : 1;
  return out;
}

namespace {

void check_morphology_args(const BinaryMask& mask, StructuringElement se) {
  if (mask.empty()) throw EmptyInputError("morphology on a zero-sized mask");
  if (se.rows < 1 || se.cols < 1) throw ValidationError("structuring element dimensions must be >= 1");
  if (se.rows > mask.height() || se.cols > mask.width()) {
    throw ValidationError("structuring element " + std::to_string(se.rows) + "x" + std::to_string(se.cols) +
                          " exceeds mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
  }
}

// Window [i - before, i + after] over a line of `n` samples. With prefix
// counts, erosion needs the whole window in bounds and all set; dilation
// needs any set sample among the in-bounds part.
template <bool kErode>
inline std::uint8_t window_result(const std::int32_t* prefix, int n, int i, int before, int after) {
  const int lo = i - before;
  const int hi = i + after;
  if constexpr (kErode) {
    if (lo < 0 || hi >= n) return 0;
    return (prefix[hi + 1] - prefix[lo]) == (before + after + 1) ? 1 : 0;
  } else {
    const int clo = std::max(lo, 0);
    const int chi = std::min(hi, n - 1);
    return (prefix[chi + 1] - prefix[clo]) > 0 ? 1 : 0;
  }
}

// Rectangular elements are separable: a row pass over the columns of the
// footprint followed by a column pass over its rows.
template <bool kErode>
BinaryMask separable_morphology(const BinaryMask& mask, StructuringElement se) {
  check_morphology_args(mask, se);
  if (se.rows == 1 && se.cols == 1) return mask;

  const int w = mask.width();
  const int h = mask.height();
  const int left = se.anchor_col();
  const int right = se.cols - 1 - left;
  const int up = se.anchor_row();
  const int down = se.rows - 1 - up;
  const auto in = mask.data();

  std::vector<std::uint8_t> rowpass(in.size());
#pragma omp parallel
  {
    std::vector<std::int32_t> prefix(static_cast<std::size_t>(w) + 1);
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* src = in.data() + static_cast<std::size_t>(y) * w;
      prefix[0] = 0;
      for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[x];
      std::uint8_t* dst = rowpass.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) dst[x] = window_result<kErode>(prefix.data(), w, x, left, right);
    }
  }

  // Column prefix counts, (h + 1) rows of w.
  std::vector<std::int32_t> colprefix(static_cast<std::size_t>(h + 1) * w, 0);
  for (int y = 0; y < h; ++y) {
    const std::int32_t* prev = colprefix.data() + static_cast<std::size_t>(y) * w;
    std::int32_t* next = colprefix.data() + static_cast<std::size_t>(y + 1) * w;
    const std::uint8_t* row = rowpass.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) next[x] = prev[x] + row[x];
  }

  BinaryMask out(w, h);
  auto dst = out.data();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int lo = y - up;
    const int hi = y + down;
    const int clo = std::max(lo, 0);
    const int chi = std::min(hi, h - 1);
    const bool inside = lo >= 0 && hi < h;
    const std::int32_t* top = colprefix.data() + static_cast<std::size_t>(clo) * w;
    const std::int32_t* bottom = colprefix.data() + static_cast<std::size_t>(chi + 1) * w;
    std::uint8_t* row = dst.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const std::int32_t n = bottom[x] - top[x];
      if constexpr (kErode) {
        row[x] = (inside && n == se.rows) ? 1 : 0;
      } else {
        row[x] = n > 0 ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, StructuringElement se) { return separable_morphology<true>(mask, se); }

BinaryMask dilate(const BinaryMask& mask, StructuringElement se) { return separable_morphology<false>(mask, se); }

BinaryMask apply_morphology(const BinaryMask& mask, StructuringElement se, Morphology op) {
  switch (op) {
    case Morphology::kErode:
      return erode(mask, se);
    case Morphology::kDilate:
      return dilate(mask, se);
    case Morphology::kNone:
      break;
  }
  return mask;
}

std::vector<RegionStats> filter_by_area(std::span<const RegionStats> regions, std::int64_t min_area) {
  if (min_area < 0) throw ValidationError("min_area must be >= 0");
  std::vector<RegionStats> kept;
  std::copy_if(regions.begin(), regions.end(), std::back_inserter(kept),
               [min_area](const RegionStats& r) { return r.area > min_area; });
  return kept;
}

namespace reference {

namespace {

template <bool kErode>
BinaryMask footprint_scan(const BinaryMask& mask, StructuringElement se) {
  check_morphology_args(mask, se);
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      bool any = false;
      for (int r = 0; r < se.rows; ++r) {
        for (int c = 0; c < se.cols; ++c) {
          const int yy = y + r - se.anchor_row();
          const int xx = x + c - se.anchor_col();
          const bool fg = xx >= 0 && xx < w && yy >= 0 && yy < h && mask.at(xx, yy);
          all = all && fg;
          any = any || fg;
        }
      }
      out.set(x, y, kErode ? all : any);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, StructuringElement se) { return footprint_scan<true>(mask, se); }
BinaryMask dilate(const BinaryMask& mask, StructuringElement se) { return footprint_scan<false>(mask, se); }

}  // namespace reference

}  // namespace ascsw
