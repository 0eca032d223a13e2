#pragma once

// Evaluation math: IoU / DIoU and their losses, scale-invariant log depth
// error, average precision, mAP and confusion matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "det3d/core.hpp"

namespace det3d::metrics {

// ---------------------------------------------------------------------------
// Overlap metrics
// ---------------------------------------------------------------------------

inline double intersection_area(const Box2D& a, const Box2D& b) noexcept {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

// |a & b| / |a | b|, or 0 when the union is empty.
inline double iou(const Box2D& a, const Box2D& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline double loss_iou(const Box2D& a, const Box2D& b) noexcept { return 1.0 - iou(a, b); }

// IoU minus the squared center distance over the squared diagonal of the
// smallest enclosing box. Two coincident degenerate points have no penalty.
inline double diou(const Box2D& a, const Box2D& b) noexcept {
  const double base = iou(a, b);
  const auto [acx, acy] = a.center();
  const auto [bcx, bcy] = b.center();
  const double rho2 = (acx - bcx) * (acx - bcx) + (acy - bcy) * (acy - bcy);
  const double ew = std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min);
  const double eh = std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min);
  const double diag2 = ew * ew + eh * eh;
  if (!(diag2 > 0.0)) return base;
  return base - rho2 / diag2;
}

inline double loss_diou(const Box2D& a, const Box2D& b) noexcept { return 1.0 - diou(a, b); }

// ---------------------------------------------------------------------------
// Scale-invariant depth error
// ---------------------------------------------------------------------------

// Variance of the log-ratio residuals log d_i - log p_i.
inline double sie(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) {
    throw DomainError("sie: length mismatch (" + std::to_string(truth.size()) + " vs " +
                      std::to_string(pred.size()) + ")");
  }
  if (truth.empty()) throw DomainError("sie: need at least one depth");
  std::vector<double> residual(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(truth[i] > 0.0) || !(pred[i] > 0.0)) {
      throw DomainError("sie: depths must be positive (index " + std::to_string(i) + ")");
    }
    residual[i] = std::log(truth[i]) - std::log(pred[i]);
  }
  const double n = static_cast<double>(residual.size());
  const double mean = std::accumulate(residual.begin(), residual.end(), 0.0) / n;
  double acc = 0.0;
  for (double r : residual) acc += (r - mean) * (r - mean);
  return acc / n;
}

// ---------------------------------------------------------------------------
// Matching and average precision
// ---------------------------------------------------------------------------

enum class Interpolation { AllPoint, ElevenPoint };

struct MatchPolicy {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::AllPoint;

  void validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
      throw ConfigError("iou_threshold must lie in (0, 1]");
    }
  }
};

// Detection indices in descending score order; ties keep input order.
inline std::vector<std::size_t> score_order(std::span<const Box2D> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

// Greedy matching in score order: each detection takes the still-unmatched
// truth with the highest IoU >= threshold (lowest index on ties). Returns, per
// detection, the matched truth index or nullopt. With `same_class` set only
// equal class ids may match.
inline std::vector<std::optional<std::size_t>> greedy_match(std::span<const Box2D> dets,
                                                            std::span<const Box2D> truths,
                                                            double iou_threshold,
                                                            bool same_class) {
  std::vector<std::optional<std::size_t>> match(dets.size());
  std::vector<bool> taken(truths.size(), false);
  for (std::size_t d : score_order(dets)) {
    double best_iou = -1.0;
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t]) continue;
      if (same_class && truths[t].class_id != dets[d].class_id) continue;
      const double o = iou(dets[d], truths[t]);
      if (o >= iou_threshold && o > best_iou) {
        best_iou = o;
        best = t;
      }
    }
    if (best) {
      taken[*best] = true;
      match[d] = best;
    }
  }
  return match;
}

struct ScoredMatch {
  double score = 0.0;
  bool true_positive = false;
};

// Area under the precision/recall curve of ranked matches. `ranked` must be
// in descending score order. Returns nullopt when there are neither truths nor
// detections.
inline std::optional<double> average_precision_ranked(std::span<const ScoredMatch> ranked,
                                                      std::size_t num_truths,
                                                      Interpolation interpolation) {
  if (num_truths == 0 && ranked.empty()) return std::nullopt;
  if (num_truths == 0 || ranked.empty()) return 0.0;

  const std::size_t n = ranked.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked[i].true_positive) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_truths);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }

  if (interpolation == Interpolation::ElevenPoint) {
    double ap = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double t = static_cast<double>(k) / 10.0;
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (recall[i] >= t) p = std::max(p, precision[i]);
      ap += p / 11.0;
    }
    return ap;
  }

  // Precision envelope, then sum rectangle areas where recall steps.
  std::vector<double> envelope(precision);
  for (std::size_t i = n - 1; i-- > 0;) envelope[i] = std::max(envelope[i], envelope[i + 1]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] != prev_recall) {
      ap += (recall[i] - prev_recall) * envelope[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

// Single-class AP over one frame.
inline std::optional<double> average_precision(std::span<const Box2D> dets,
                                               std::span<const Box2D> truths,
                                               const MatchPolicy& policy) {
  policy.validate();
  const auto match = greedy_match(dets, truths, policy.iou_threshold, false);
  std::vector<ScoredMatch> ranked;
  ranked.reserve(dets.size());
  for (std::size_t d : score_order(dets)) ranked.push_back({dets[d].score, match[d].has_value()});
  return average_precision_ranked(ranked, truths.size(), policy.interpolation);
}

// Arithmetic mean of the per-class APs.
template <typename Range>
double mean_average_precision(const Range& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    sum += v;
    ++n;
  }
  if (n == 0) throw DomainError("mean_average_precision: no class has a defined AP");
  return sum / static_cast<double>(n);
}

inline double mean_average_precision(const std::map<std::string, double>& per_class) {
  std::vector<double> values;
  values.reserve(per_class.size());
  for (const auto& [name, ap] : per_class) values.push_back(ap);
  return mean_average_precision(values);
}

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

// (C+1) x (C+1) counts indexed (truth class, detected class); index C is the
// background row/column.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0)
      : classes_(num_classes), counts_((num_classes + 1) * (num_classes + 1), 0) {}

  std::size_t num_classes() const noexcept { return classes_; }
  std::size_t background() const noexcept { return classes_; }

  std::size_t at(std::size_t truth, std::size_t det) const {
    check(truth);
    check(det);
    return counts_[truth * (classes_ + 1) + det];
  }
  void add(std::size_t truth, std::size_t det, std::size_t n = 1) {
    check(truth);
    check(det);
    counts_[truth * (classes_ + 1) + det] += n;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) throw ConfigError("confusion matrix size mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

  std::size_t total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  void check(std::size_t i) const {
    if (i > classes_) throw BoundsError("confusion matrix index " + std::to_string(i));
  }

  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

// Class-agnostic greedy IoU matching; matched pairs count at (truth, det),
// leftovers against the background.
inline ConfusionMatrix confusion_matrix(std::span<const Box2D> dets,
                                        std::span<const Box2D> truths,
                                        const MatchPolicy& policy, std::size_t num_classes) {
  policy.validate();
  ConfusionMatrix m(num_classes);
  const auto match = greedy_match(dets, truths, policy.iou_threshold, false);
  std::vector<bool> truth_used(truths.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (match[d]) {
      truth_used[*match[d]] = true;
      m.add(truths[*match[d]].class_id, dets[d].class_id);
    } else {
      m.add(m.background(), dets[d].class_id);
    }
  }
  for (std::size_t t = 0; t < truths.size(); ++t)
    if (!truth_used[t]) m.add(truths[t].class_id, m.background());
  return m;
}

// ---------------------------------------------------------------------------
// Dataset evaluation
// ---------------------------------------------------------------------------

struct FrameDetections {
  std::vector<Box2D> boxes;
  std::vector<std::optional<Box3D>> boxes3d;  // empty, or parallel to `boxes`
};

struct FrameTruth {
  std::vector<Box2D> boxes;
  std::vector<Box3D> boxes3d;  // empty, or parallel to `boxes`
};

struct EvalReport {
  std::vector<std::pair<std::string, double>> per_class_ap;  // taxonomy order
  std::optional<double> map;
  ConfusionMatrix confusion;
  std::optional<double> sie;
  std::optional<double> mean_diou_loss;
  std::size_t matched_pairs = 0;
};

// Per-class AP pools every frame's ranked matches (matching itself is per
// frame). SIE and mean DIoU loss run over the class-aware matched pairs.
inline EvalReport evaluate(std::span<const FrameDetections> preds,
                           std::span<const FrameTruth> truths, const ClassTaxonomy& taxonomy,
                           const MatchPolicy& policy) {
  policy.validate();
  if (preds.size() != truths.size()) throw ValidationError("evaluate: frame count mismatch");
  const std::size_t classes = taxonomy.size();

  EvalReport report{{}, std::nullopt, ConfusionMatrix(classes), std::nullopt, std::nullopt, 0};
  std::vector<std::vector<ScoredMatch>> ranked(classes);
  std::vector<std::size_t> truth_count(classes, 0);
  std::vector<double> depth_truth, depth_pred;
  double diou_loss_sum = 0.0;

  for (std::size_t f = 0; f < preds.size(); ++f) {
    const auto& p = preds[f];
    const auto& t = truths[f];
    for (const auto& b : p.boxes) taxonomy.at(b.class_id);
    for (const auto& b : t.boxes) {
      taxonomy.at(b.class_id);
      ++truth_count[b.class_id];
    }
    report.confusion += confusion_matrix(p.boxes, t.boxes, policy, classes);

    const auto match = greedy_match(p.boxes, t.boxes, policy.iou_threshold, true);
    for (std::size_t d : score_order(p.boxes)) {
      ranked[p.boxes[d].class_id].push_back({p.boxes[d].score, match[d].has_value()});
    }
    for (std::size_t d = 0; d < p.boxes.size(); ++d) {
      if (!match[d]) continue;
      const std::size_t ti = *match[d];
      ++report.matched_pairs;
      diou_loss_sum += loss_diou(p.boxes[d], t.boxes[ti]);
      if (d < p.boxes3d.size() && p.boxes3d[d] && ti < t.boxes3d.size()) {
        depth_pred.push_back(p.boxes3d[d]->center.z);
        depth_truth.push_back(t.boxes3d[ti].center.z);
      }
    }
  }

  std::vector<double> defined;
  for (std::size_t c = 0; c < classes; ++c) {
    std::stable_sort(ranked[c].begin(), ranked[c].end(),
                     [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
    const auto ap = average_precision_ranked(ranked[c], truth_count[c], policy.interpolation);
    if (!ap) continue;
    report.per_class_ap.emplace_back(taxonomy.name(c), *ap);
    defined.push_back(*ap);
  }
  if (!defined.empty()) report.map = mean_average_precision(defined);
  if (report.matched_pairs > 0) {
    report.mean_diou_loss = diou_loss_sum / static_cast<double>(report.matched_pairs);
  }
  if (!depth_truth.empty()) report.sie = sie(depth_truth, depth_pred);
  return report;
}

}  // namespace det3d::metrics
