#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ascsw/mask_ops.hpp"

namespace ascsw::metrics {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  /// Counts for the other class of a binary problem (fp <-> fn, tp <-> tn).
  ConfusionCounts background() const noexcept { return {tn, fn, fp, tp}; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Foreground-class counts. Throws ValidationError on a size mismatch.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// tp / (tp + fp + fn); a class absent from both masks scores 1.
double iou(const ConfusionCounts& c);
/// Unweighted mean of per-class IoU. Throws on an empty list.
double miou(const std::vector<ConfusionCounts>& per_class);

/// A ratio plus whether its denominator was nonzero. Undefined ratios are 0.
struct Ratio {
  double value = 0.0;
  bool defined = true;
};

Ratio precision(const ConfusionCounts& c);
Ratio recall(const ConfusionCounts& c);
/// Harmonic mean 2pr / (p + r); 0 (undefined) when p + r == 0.
Ratio f1(double p, double r);

struct MetricsReport {
  std::size_t images = 0;
  ConfusionCounts counts;  // foreground, summed over images
  double iou_background = 0.0;
  double iou_foreground = 0.0;
  double miou = 0.0;
  Ratio precision;
  Ratio recall;
  Ratio f1;

  static MetricsReport from_counts(const ConfusionCounts& fg, std::size_t images);
};

struct ImageMetrics {
  std::string name;
  MetricsReport report;
};

struct BatchReport {
  MetricsReport total;  // micro-averaged
  std::vector<ImageMetrics> per_image;
  std::vector<std::string> missing_pred;  // in gt only
  std::vector<std::string> missing_gt;    // in pred only
};

/// Pairs `.pgm` masks by filename and micro-averages. Unmatched names throw
/// ValidationError (listing them) unless `allow_missing`.
BatchReport batch_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                       bool allow_missing = false);

/// In-memory variant over already paired masks.
BatchReport batch_eval(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt,
                       const std::vector<std::string>& names = {});

std::string to_json(const BatchReport& report, bool include_per_image = true);
/// Aligned text table: Precision, Recall, Mean IoU, F1 Score.
std::string to_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace ascsw::metrics
