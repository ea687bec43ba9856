#include "ascsw/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ascsw/error.hpp"
#include "ascsw/image_io.hpp"

namespace ascsw::metrics {

namespace fs = std::filesystem;

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ValidationError("confusion: prediction is " + std::to_string(pred.width()) + "x" +
                          std::to_string(pred.height()) + ", ground truth is " + std::to_string(gt.width()) + "x" +
                          std::to_string(gt.height()));
  }
  const auto p = pred.data();
  const auto g = gt.data();
  const auto n = static_cast<std::ptrdiff_t>(p.size());
  std::uint64_t tp = 0, fp = 0, fn = 0;
#pragma omp parallel for reduction(+ : tp, fp, fn) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    tp += p[i] & g[i];
    fp += p[i] & (g[i] ^ 1u);
    fn += (p[i] ^ 1u) & g[i];
  }
  return {tp, fp, fn, static_cast<std::uint64_t>(n) - tp - fp - fn};
}

double iou(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(denom);
}

double miou(const std::vector<ConfusionCounts>& per_class) {
  if (per_class.empty()) throw ValidationError("miou needs at least one class");
  double s = 0.0;
  for (const auto& c : per_class) s += iou(c);
  return s / static_cast<double>(per_class.size());
}

Ratio precision(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fp;
  if (denom == 0) return {0.0, false};
  return {static_cast<double>(c.tp) / static_cast<double>(denom), true};
}

Ratio recall(const ConfusionCounts& c) {
  const std::uint64_t denom = c.tp + c.fn;
  if (denom == 0) return {0.0, false};
  return {static_cast<double>(c.tp) / static_cast<double>(denom), true};
}

Ratio f1(double p, double r) {
  if (p + r == 0.0) return {0.0, false};
  return {2.0 * p * r / (p + r), true};
}

MetricsReport MetricsReport::from_counts(const ConfusionCounts& fg, std::size_t images) {
  MetricsReport m;
  m.images = images;
  m.counts = fg;
  m.iou_foreground = iou(fg);
  m.iou_background = iou(fg.background());
  m.miou = metrics::miou({fg.background(), fg});
  m.precision = metrics::precision(fg);
  m.recall = metrics::recall(fg);
  m.f1 = metrics::f1(m.precision.value, m.recall.value);
  m.f1.defined = m.f1.defined && m.precision.defined && m.recall.defined;
  return m;
}

BatchReport batch_eval(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt,
                       const std::vector<std::string>& names) {
  if (pred.size() != gt.size()) throw ValidationError("batch_eval: prediction and ground-truth counts differ");
  const auto n = static_cast<std::ptrdiff_t>(pred.size());
  std::vector<ConfusionCounts> counts(pred.size());
  // Outer loop is serial; confusion() parallelizes over pixels.
  for (std::ptrdiff_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(i)] = confusion(pred[i], gt[i]);

  BatchReport report;
  ConfusionCounts total;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += counts[i];
    const std::string name = i < names.size() ? names[i] : std::to_string(i);
    report.per_image.push_back({name, MetricsReport::from_counts(counts[i], 1)});
  }
  report.total = MetricsReport::from_counts(total, counts.size());
  return report;
}

BatchReport batch_eval(const fs::path& pred_dir, const fs::path& gt_dir, bool allow_missing) {
  const auto pred_files = list_files(pred_dir);
  const auto gt_files = list_files(gt_dir);
  std::set<std::string> pred_names, gt_names;
  for (const auto& p : pred_files) pred_names.insert(p.filename().string());
  for (const auto& p : gt_files) gt_names.insert(p.filename().string());

  std::vector<std::string> missing_pred, missing_gt, matched;
  std::set_difference(gt_names.begin(), gt_names.end(), pred_names.begin(), pred_names.end(),
                      std::back_inserter(missing_pred));
  std::set_difference(pred_names.begin(), pred_names.end(), gt_names.begin(), gt_names.end(),
                      std::back_inserter(missing_gt));
  std::set_intersection(pred_names.begin(), pred_names.end(), gt_names.begin(), gt_names.end(),
                        std::back_inserter(matched));
  if (!allow_missing && (!missing_pred.empty() || !missing_gt.empty())) {
    std::string msg = "eval: unmatched files";
    for (const auto& m : missing_pred) msg += "\n  no prediction for " + m;
    for (const auto& m : missing_gt) msg += "\n  no ground truth for " + m;
    throw ValidationError(msg);
  }
  if (matched.empty()) throw ValidationError("eval: no matching mask pairs");

  std::vector<BinaryMask> pred, gt;
  for (const auto& name : matched) {
    pred.push_back(read_mask(pred_dir / name));
    gt.push_back(read_mask(gt_dir / name));
  }
  BatchReport report = batch_eval(pred, gt, matched);
  report.missing_pred = std::move(missing_pred);
  report.missing_gt = std::move(missing_gt);
  return report;
}

namespace {

nlohmann::json ratio_json(const Ratio& r) {
  if (!r.defined) return {{"value", r.value}, {"undefined", true}};
  return r.value;
}

nlohmann::json report_json(const MetricsReport& m) {
  nlohmann::json j;
  j["images"] = m.images;
  j["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}};
  j["iou"] = {{"background", m.iou_background}, {"foreground", m.iou_foreground}};
  j["miou"] = m.miou;
  j["precision"] = ratio_json(m.precision);
  j["recall"] = ratio_json(m.recall);
  j["f1"] = ratio_json(m.f1);
  return j;
}

}  // namespace

std::string to_json(const BatchReport& report, bool include_per_image) {
  nlohmann::json j = report_json(report.total);
  j["averaging"] = "micro";
  if (!report.missing_pred.empty()) j["missing_prediction"] = report.missing_pred;
  if (!report.missing_gt.empty()) j["missing_ground_truth"] = report.missing_gt;
  if (include_per_image) {
    j["per_image"] = nlohmann::json::array();
    for (const auto& im : report.per_image) {
      nlohmann::json e = report_json(im.report);
      e["name"] = im.name;
      j["per_image"].push_back(std::move(e));
    }
  }
  return j.dump(2);
}

std::string to_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t name_width = 5;
  for (const auto& [name, m] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "Input" << std::right;
  for (const char* h : {"Precision", "Recall", "Mean IoU", "FG IoU", "F1 Score"}) out << "  " << std::setw(10) << h;
  out << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& [name, m] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name << std::right;
    for (double v : {m.precision.value, m.recall.value, m.miou, m.iou_foreground, m.f1.value}) {
      out << "  " << std::setw(10) << v;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ascsw::metrics
