#include "ascsw/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "ascsw/error.hpp"

namespace ascsw {

TrackerState::TrackerState(double dist_threshold, std::uint64_t next_id)
    : dist_threshold_(dist_threshold), next_id_(next_id) {
  if (!(dist_threshold > 0.0)) throw ValidationError("dist_threshold must be > 0");
  if (next_id == 0) throw ValidationError("track IDs start at 1");
}

void TrackerState::set_previous(std::vector<std::pair<TrackId, Point2>> previous) {
  for (const auto& [id, c] : previous) next_id_ = std::max(next_id_, id.value + 1);
  previous_ = std::move(previous);
}

std::vector<TrackedRegion> TrackerState::assign(std::span<const RegionStats> regions) {
  struct Candidate {
    double dist2;
    std::size_t prev;
    std::size_t curr;
  };
  // Compare squared distances; exact for the integer/half-integer centroids
  // that sit on the threshold in practice.
  const double limit2 = dist_threshold_ * dist_threshold_;
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < previous_.size(); ++p) {
    for (std::size_t c = 0; c < regions.size(); ++c) {
      const double dx = regions[c].centroid.x - previous_[p].second.x;
      const double dy = regions[c].centroid.y - previous_[p].second.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < limit2) candidates.push_back({d2, p, c});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist2, a.prev, a.curr) < std::tie(b.dist2, b.prev, b.curr);
  });

  std::vector<TrackId> ids(regions.size());
  std::vector<bool> prev_claimed(previous_.size(), false);
  std::vector<bool> curr_claimed(regions.size(), false);
  for (const Candidate& cand : candidates) {
    if (prev_claimed[cand.prev] || curr_claimed[cand.curr]) continue;
    prev_claimed[cand.prev] = true;
    curr_claimed[cand.curr] = true;
    ids[cand.curr] = previous_[cand.prev].first;
  }
  for (std::size_t c = 0; c < regions.size(); ++c) {
    if (!curr_claimed[c]) ids[c] = TrackId{next_id_++};
  }

  std::vector<TrackedRegion> out;
  out.reserve(regions.size());
  previous_.clear();
  for (std::size_t c = 0; c < regions.size(); ++c) {
    out.push_back({regions[c], ids[c]});
    previous_.emplace_back(ids[c], regions[c].centroid);
  }
  return out;
}

VoteWindow::VoteWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ValidationError("sliding window size must be >= 1");
}

void VoteWindow::push(TrackIdSet frame_ids) {
  for (const TrackId& id : frame_ids) ++counts_[id];
  queue_.push_back(std::move(frame_ids));
  while (queue_.size() > capacity_) {
    for (const TrackId& id : queue_.front()) {
      auto it = counts_.find(id);
      if (--it->second == 0) counts_.erase(it);
    }
    queue_.pop_front();
  }
}

TrackIdSet VoteWindow::vote(const KeepMode& mode) const {
  TrackIdSet kept;
  if (counts_.empty()) return kept;
  if (std::holds_alternative<KeepArgmax>(mode)) {
    // counts_ iterates in ascending ID order, so strict '>' keeps the
    // smallest ID among ties.
    auto best = counts_.begin();
    for (auto it = counts_.begin(); it != counts_.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    kept.insert(best->first);
    return kept;
  }
  const double f = std::get<KeepFraction>(mode).fraction;
  // The epsilon keeps e.g. 0.3 * 10 from rounding up to 4.
  const auto needed = static_cast<std::size_t>(std::ceil(f * static_cast<double>(queue_.size()) - 1e-9));
  for (const auto& [id, n] : counts_) {
    if (n >= needed) kept.insert(id);
  }
  return kept;
}

TrackIdSet push_and_vote(VoteWindow& window, TrackIdSet frame_ids, const KeepMode& mode) {
  window.push(std::move(frame_ids));
  return window.vote(mode);
}

BinaryMask filter_mask(const LabelMap& labels, std::span<const TrackedRegion> assigned, const TrackIdSet& keep) {
  BinaryMask out(labels.width, labels.height);
  std::int32_t max_label = 0;
  for (const auto& a : assigned) max_label = std::max(max_label, a.region.label);
  std::vector<std::uint8_t> keep_label(static_cast<std::size_t>(max_label) + 1, 0);
  for (const auto& a : assigned) {
    if (keep.contains(a.id)) keep_label[static_cast<std::size_t>(a.region.label)] = 1;
  }
  auto dst = out.data();
  const std::size_t n = labels.labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t l = labels.labels[i];
    dst[i] = (l > 0 && l <= max_label) ? keep_label[static_cast<std::size_t>(l)] : 0;
  }
  return out;
}

void PipelineConfig::validate() const {
  if (se.rows < 1 || se.cols < 1) throw ValidationError("kernel dimensions must be >= 1");
  if (min_area < 0) throw ValidationError("min_area must be >= 0");
  if (window < 1) throw ValidationError("window size k must be >= 1");
  if (!(dist_threshold > 0.0)) throw ValidationError("dist_threshold must be > 0");
  if (const auto* frac = std::get_if<KeepFraction>(&keep)) {
    if (!(frac->fraction > 0.0 && frac->fraction <= 1.0)) throw ValidationError("keep fraction must be in (0, 1]");
  }
}

SequenceProcessor::SequenceProcessor(PipelineConfig config)
    : config_((config.validate(), std::move(config))),
      tracker_(config_.dist_threshold),
      window_(config_.window) {}

FrameResult SequenceProcessor::process(const BinaryMask& mask) {
  if (frames_seen_ == 0) {
    width_ = mask.width();
    height_ = mask.height();
  } else if (mask.width() != width_ || mask.height() != height_) {
    throw SequenceError("frame " + std::to_string(frames_seen_) + " is " + std::to_string(mask.width()) + "x" +
                        std::to_string(mask.height()) + ", sequence is " + std::to_string(width_) + "x" +
                        std::to_string(height_));
  }

  const BinaryMask morphed = apply_morphology(mask, config_.se, config_.morphology);
  Labeling labeling = label_regions(morphed, config_.connectivity);
  const std::vector<RegionStats> regions = filter_by_area(labeling.regions, config_.min_area);

  FrameResult result;
  result.frame_index = frames_seen_++;
  result.assigned = tracker_.assign(regions);
  TrackIdSet frame_ids;
  for (const auto& a : result.assigned) frame_ids.insert(a.id);
  result.kept_ids = push_and_vote(window_, std::move(frame_ids), config_.keep);
  result.vote_counts = window_.counts();
  result.output = filter_mask(labeling.map, result.assigned, result.kept_ids);
  return result;
}

}  // namespace ascsw
