#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "vckw/errors.hpp"

namespace vckw {

struct Window {
  double start_sec = 0.0;
  double end_sec = 0.0;
  bool operator==(const Window&) const = default;
};

struct ScoredWindow {
  double start_sec = 0.0;
  double end_sec = 0.0;
  double score = 0.0;
  Window window() const { return {start_sec, end_sec}; }
  bool operator==(const ScoredWindow&) const = default;
};

inline void check_window(const Window& w, const char* who) {
  if (!(w.start_sec < w.end_sec))
    throw validation_error(std::string(who) + ": degenerate window (start >= end)");
  if (!std::isfinite(w.start_sec) || !std::isfinite(w.end_sec))
    throw validation_error(std::string(who) + ": non-finite window bound");
}

// |intersection| / |union|; 0 when disjoint.
inline double temporal_iou(const Window& a, const Window& b) {
  check_window(a, "temporal_iou");
  check_window(b, "temporal_iou");
  const double inter = std::max(0.0, std::min(a.end_sec, b.end_sec) - std::max(a.start_sec, b.start_sec));
  const double uni = (a.end_sec - a.start_sec) + (b.end_sec - b.start_sec) - inter;
  return inter / uni;
}

// Rank order for predictions: descending score, ties keep input order.
inline std::vector<int> rank_by_score(const std::vector<ScoredWindow>& preds) {
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return preds[a].score > preds[b].score; });
  return order;
}

// Fraction of samples whose top-scored prediction reaches IoU >= thresh with
// any ground-truth window. A sample with no predictions counts as a miss.
inline double recall_at_1(const std::vector<std::vector<ScoredWindow>>& preds,
                          const std::vector<std::vector<Window>>& gts, double iou_thresh) {
  if (preds.size() != gts.size()) throw validation_error("recall_at_1: sample count mismatch");
  if (preds.empty()) throw validation_error("recall_at_1: no samples");
  int hits = 0;
  for (size_t s = 0; s < preds.size(); ++s) {
    if (gts[s].empty()) throw validation_error("recall_at_1: sample without ground truth");
    if (preds[s].empty()) continue;
    const int top = rank_by_score(preds[s])[0];
    for (const Window& gt : gts[s]) {
      if (temporal_iou(preds[s][top].window(), gt) >= iou_thresh) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

// Average precision for one sample at one IoU threshold. Predictions are
// taken in rank order; each matches the unmatched ground truth with the
// highest IoU >= thresh (ties -> lowest gt index). AP integrates the
// precision/recall steps without interpolation smoothing.
inline double average_precision(const std::vector<ScoredWindow>& preds,
                                const std::vector<Window>& gts, double iou_thresh) {
  if (gts.empty()) throw validation_error("average_precision: sample without ground truth");
  const std::vector<int> order = rank_by_score(preds);
  std::vector<bool> matched(gts.size(), false);
  double ap = 0.0;
  int tp = 0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const ScoredWindow& p = preds[order[rank]];
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (matched[g]) continue;
      const double iou = temporal_iou(p.window(), gts[g]);
      if (iou >= iou_thresh && iou > best_iou) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    if (best >= 0) {
      matched[best] = true;
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(gts.size());
}

struct ApResult {
  std::vector<double> thresholds;
  std::vector<double> per_threshold;  // AP averaged over samples, per threshold
  double average = 0.0;               // mean over thresholds

  double at(double thresh) const {
    for (size_t i = 0; i < thresholds.size(); ++i)
      if (std::abs(thresholds[i] - thresh) < 1e-9) return per_threshold[i];
    throw validation_error("ApResult::at: threshold not evaluated");
  }
};

inline ApResult mean_ap(const std::vector<std::vector<ScoredWindow>>& preds,
                        const std::vector<std::vector<Window>>& gts,
                        const std::vector<double>& thresholds) {
  if (preds.size() != gts.size()) throw validation_error("mean_ap: sample count mismatch");
  if (preds.empty()) throw validation_error("mean_ap: no samples");
  if (thresholds.empty()) throw validation_error("mean_ap: empty threshold list");
  ApResult res;
  res.thresholds = thresholds;
  for (double t : thresholds) {
    double sum = 0.0;
    for (size_t s = 0; s < preds.size(); ++s) sum += average_precision(preds[s], gts[s], t);
    res.per_threshold.push_back(sum / static_cast<double>(preds.size()));
  }
  res.average = std::accumulate(res.per_threshold.begin(), res.per_threshold.end(), 0.0) /
                static_cast<double>(res.per_threshold.size());
  return res;
}

inline std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 9; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

// 1 iff the highest-scored clip has a label >= positive_thresh.
// Ties at the argmax break to the lowest index.
inline int hit_at_1(const std::vector<double>& pred_saliency, const std::vector<int>& gt_labels,
                    int positive_thresh) {
  if (pred_saliency.size() != gt_labels.size())
    throw validation_error("hit_at_1: length mismatch");
  if (pred_saliency.empty()) throw validation_error("hit_at_1: empty input");
  size_t best = 0;
  for (size_t i = 1; i < pred_saliency.size(); ++i)
    if (pred_saliency[i] > pred_saliency[best]) best = i;
  return gt_labels[best] >= positive_thresh ? 1 : 0;
}

}  // namespace vckw
