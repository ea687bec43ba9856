#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "ascsw/mask_ops.hpp"

namespace ascsw {

/// Track identifier, allocated monotonically from 1 and never reused within
/// a sequence.
struct TrackId {
  std::uint64_t value = 0;
  auto operator<=>(const TrackId&) const = default;
};

using TrackIdSet = std::set<TrackId>;

struct TrackedRegion {
  RegionStats region;
  TrackId id;
  bool operator==(const TrackedRegion&) const = default;
};

/// Centroids of the previous frame plus the ID allocator.
class TrackerState {
 public:
  explicit TrackerState(double dist_threshold = 50.0, std::uint64_t next_id = 1);

  double dist_threshold() const noexcept { return dist_threshold_; }
  std::uint64_t next_id() const noexcept { return next_id_; }
  const std::vector<std::pair<TrackId, Point2>>& previous() const noexcept { return previous_; }

  /// Seeds the previous frame. `next_id` is raised past every seeded ID.
  void set_previous(std::vector<std::pair<TrackId, Point2>> previous);

  /// Matches each region to at most one previous-frame ID whose centroid is
  /// strictly closer than the threshold (greedy, nearest pair first); the
  /// rest get fresh IDs in region order. Replaces the previous frame with
  /// this frame's (ID, centroid) pairs.
  std::vector<TrackedRegion> assign(std::span<const RegionStats> regions);

 private:
  double dist_threshold_;
  std::uint64_t next_id_;
  std::vector<std::pair<TrackId, Point2>> previous_;
};

inline std::vector<TrackedRegion> assign_ids(TrackerState& state, std::span<const RegionStats> regions) {
  return state.assign(regions);
}

/// Keep the single most frequent ID (ties -> smallest ID).
struct KeepArgmax {
  bool operator==(const KeepArgmax&) const = default;
};
/// Keep every ID seen in at least ceil(fraction * frames in window) frames.
struct KeepFraction {
  double fraction = 1.0;
  bool operator==(const KeepFraction&) const = default;
};
using KeepMode = std::variant<KeepArgmax, KeepFraction>;

/// FIFO of the last `capacity` frames' ID sets with running occurrence
/// counts.
class VoteWindow {
 public:
  explicit VoteWindow(std::size_t capacity = 45);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return queue_.size(); }
  bool full() const noexcept { return queue_.size() == capacity_; }
  const std::deque<TrackIdSet>& queue() const noexcept { return queue_; }
  /// Occurrence count per ID over the frames currently in the window.
  const std::map<TrackId, std::size_t>& counts() const noexcept { return counts_; }

  void push(TrackIdSet frame_ids);
  TrackIdSet vote(const KeepMode& mode) const;

 private:
  std::size_t capacity_;
  std::deque<TrackIdSet> queue_;
  std::map<TrackId, std::size_t> counts_;
};

TrackIdSet push_and_vote(VoteWindow& window, TrackIdSet frame_ids, const KeepMode& mode = KeepArgmax{});

/// Union of the pixels of regions whose ID is in `keep`. IDs absent from
/// this frame contribute nothing.
BinaryMask filter_mask(const LabelMap& labels, std::span<const TrackedRegion> assigned, const TrackIdSet& keep);

struct PipelineConfig {
  StructuringElement se{1, 1};
  std::int64_t min_area = 50;
  Connectivity connectivity = Connectivity::kEight;
  std::size_t window = 45;
  double dist_threshold = 50.0;
  KeepMode keep = KeepArgmax{};
  Morphology morphology = Morphology::kErode;

  /// Throws ValidationError on k < 1, threshold <= 0, etc.
  void validate() const;
};

struct FrameResult {
  std::size_t frame_index = 0;
  std::vector<TrackedRegion> assigned;
  TrackIdSet kept_ids;
  std::map<TrackId, std::size_t> vote_counts;
  BinaryMask output;
};

/// Sliding-window denoiser for one mask sequence. Frames must be fed in
/// order; the object owns all per-sequence state.
class SequenceProcessor {
 public:
  explicit SequenceProcessor(PipelineConfig config);

  /// morphology -> label -> area filter -> assign IDs -> vote -> filter.
  /// Throws SequenceError if the frame size differs from the first frame.
  FrameResult process(const BinaryMask& mask);

  const PipelineConfig& config() const noexcept { return config_; }
  const TrackerState& tracker() const noexcept { return tracker_; }
  const VoteWindow& window() const noexcept { return window_; }
  std::size_t frames_seen() const noexcept { return frames_seen_; }

 private:
  PipelineConfig config_;
  TrackerState tracker_;
  VoteWindow window_;
  std::size_t frames_seen_ = 0;
  int width_ = -1;
  int height_ = -1;
};

}  // namespace ascsw
