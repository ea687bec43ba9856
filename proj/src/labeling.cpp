#include <algorithm>
#include <numeric>

#include "ascsw/mask_ops.hpp"

namespace ascsw {

namespace {

class DisjointSets {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }

  std::int32_t find(std::int32_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller provisional label becomes the root.
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace

Labeling label_regions(const BinaryMask& mask, Connectivity connectivity) {
  const int w = mask.width();
  const int h = mask.height();
  Labeling result;
  result.map.width = w;
  result.map.height = h;
  result.map.labels.assign(mask.size(), 0);
  if (mask.empty()) return result;

  auto& labels = result.map.labels;
  const bool diagonal = connectivity == Connectivity::kEight;
  const auto px = mask.data();
  DisjointSets sets;
  sets.make();  // slot 0 = background

  // Pass 1: provisional labels from the already-visited neighbours
  // (W, NW, N, NE).
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!px[i]) continue;
      std::int32_t neighbours[4];
      int n = 0;
      if (x > 0 && labels[i - 1]) neighbours[n++] = labels[i - 1];
      if (y > 0) {
        const std::size_t up = i - w;
        if (labels[up]) neighbours[n++] = labels[up];
        if (diagonal && x > 0 && labels[up - 1]) neighbours[n++] = labels[up - 1];
        if (diagonal && x + 1 < w && labels[up + 1]) neighbours[n++] = labels[up + 1];
      }
      if (n == 0) {
        labels[i] = sets.make();
        continue;
      }
      std::int32_t chosen = *std::min_element(neighbours, neighbours + n);
      labels[i] = chosen;
      for (int k = 0; k < n; ++k) sets.unite(chosen, neighbours[k]);
    }
  }

  // Pass 2: resolve roots, renumber densely in raster order of first pixel,
  // and accumulate area moments.
  std::vector<std::int32_t> dense;  // root -> final label, 0 = unassigned
  struct Moments {
    std::int64_t area = 0;
    std::int64_t sum_x = 0;
    std::int64_t sum_y = 0;
    int min_x, min_y, max_x, max_y;
  };
  std::vector<Moments> moments;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!labels[i]) continue;
      const std::int32_t root = sets.find(labels[i]);
      if (static_cast<std::size_t>(root) >= dense.size()) dense.resize(static_cast<std::size_t>(root) + 1, 0);
      if (dense[root] == 0) {
        moments.push_back(Moments{0, 0, 0, x, y, x, y});
        dense[root] = static_cast<std::int32_t>(moments.size());
      }
      const std::int32_t label = dense[root];
      labels[i] = label;
      Moments& m = moments[static_cast<std::size_t>(label - 1)];
      ++m.area;
      m.sum_x += x;
      m.sum_y += y;
      m.min_x = std::min(m.min_x, x);
      m.max_x = std::max(m.max_x, x);
      m.min_y = std::min(m.min_y, y);
      m.max_y = std::max(m.max_y, y);
    }
  }

  result.regions.reserve(moments.size());
  for (std::size_t k = 0; k < moments.size(); ++k) {
    const Moments& m = moments[k];
    RegionStats r;
    r.label = static_cast<int>(k + 1);
    r.area = m.area;
    r.centroid = {static_cast<double>(m.sum_x) / static_cast<double>(m.area),
                  static_cast<double>(m.sum_y) / static_cast<double>(m.area)};
    r.min_x = m.min_x;
    r.min_y = m.min_y;
    r.max_x = m.max_x;
    r.max_y = m.max_y;
    result.regions.push_back(r);
  }
  return result;
}

}  // namespace ascsw
