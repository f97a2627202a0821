#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vckw/clustering.hpp"
#include "vckw/context.hpp"
#include "vckw/data.hpp"
#include "vckw/dense.hpp"
#include "vckw/errors.hpp"
#include "vckw/keywords.hpp"
#include "vckw/losses.hpp"
#include "vckw/metrics.hpp"
#include "vckw/synth.hpp"

namespace vckw {

// Knobs shared by inference, training and evaluation. proj_dim 0 means
// "use the feature dimension".
struct RunConfig {
  double tau = 0.1;
  double lambda_kw = 0.3;
  std::optional<int> target_clusters;
  int proj_dim = 0;
  double learning_rate = 1e-3;
  int steps = 300;
  std::uint64_t seed = 0;
  int batch_size = 8;
  std::vector<double> iou_thresholds;  // empty -> 0.50:0.05:0.95
  int saliency_positive_thresh = 3;

  void validate() const {
    if (!(tau > 0.0)) throw validation_error("config: tau must be positive");
    if (lambda_kw < 0.0) throw validation_error("config: lambda_kw must be >= 0");
    if (target_clusters && *target_clusters < 1)
      throw validation_error("config: target_clusters must be >= 1");
    if (proj_dim < 0) throw validation_error("config: proj_dim must be >= 0");
    if (!(learning_rate > 0.0)) throw validation_error("config: learning_rate must be positive");
    if (steps < 0) throw validation_error("config: steps must be >= 0");
    if (batch_size < 1) throw validation_error("config: batch_size must be >= 1");
    for (double t : iou_thresholds)
      if (!(t > 0.0 && t <= 1.0)) throw validation_error("config: iou thresholds must be in (0,1]");
  }

  std::vector<double> thresholds() const {
    return iou_thresholds.empty() ? default_iou_thresholds() : iou_thresholds;
  }

  json to_json() const {
    json j;
    j["tau"] = tau;
    j["lambda_kw"] = lambda_kw;
    j["target_clusters"] = target_clusters ? json(*target_clusters) : json(nullptr);
    j["proj_dim"] = proj_dim;
    j["learning_rate"] = learning_rate;
    j["steps"] = steps;
    j["seed"] = seed;
    j["batch_size"] = batch_size;
    j["iou_thresholds"] = iou_thresholds;
    j["saliency_positive_thresh"] = saliency_positive_thresh;
    return j;
  }

  // Missing keys keep their defaults, so partial config files are fine.
  static RunConfig from_json(const json& j) {
    RunConfig c;
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    if (j.contains("lambda_kw")) c.lambda_kw = j["lambda_kw"].get<double>();
    if (j.contains("target_clusters") && !j["target_clusters"].is_null())
      c.target_clusters = j["target_clusters"].get<int>();
    if (j.contains("proj_dim")) c.proj_dim = j["proj_dim"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("steps")) c.steps = j["steps"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("iou_thresholds"))
      c.iou_thresholds = j["iou_thresholds"].get<std::vector<double>>();
    if (j.contains("saliency_positive_thresh"))
      c.saliency_positive_thresh = j["saliency_positive_thresh"].get<int>();
    return c;
  }
};

// Clip scores to scored windows: clips at or above mean + 0.5 * stddev form
// maximal runs, each run becomes [i0, i1+1) in seconds scored by its mean.
// If nothing clears the bar the argmax clip becomes a singleton window.
inline std::vector<ScoredWindow> windows_from_saliency(const std::vector<double>& scores,
                                                       double clip_duration_sec) {
  if (scores.empty()) throw validation_error("windows_from_saliency: empty scores");
  if (!(clip_duration_sec > 0.0))
    throw validation_error("windows_from_saliency: clip duration must be positive");
  for (double s : scores)
    if (!std::isfinite(s)) throw numeric_error("windows_from_saliency: non-finite score");

  const int L = static_cast<int>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= L;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double thresh = mean + 0.5 * std::sqrt(var / L);

  std::vector<ScoredWindow> out;
  int run_start = -1;
  double run_sum = 0.0;
  for (int i = 0; i <= L; ++i) {
    const bool on = i < L && scores[i] >= thresh;
    if (on) {
      if (run_start < 0) run_start = i, run_sum = 0.0;
      run_sum += scores[i];
    } else if (run_start >= 0) {
      out.push_back({run_start * clip_duration_sec, i * clip_duration_sec,
                     run_sum / (i - run_start)});
      run_start = -1;
    }
  }
  if (out.empty()) {
    const int best = static_cast<int>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    out.push_back({best * clip_duration_sec, (best + 1) * clip_duration_sec, scores[best]});
  }
  sort_windows(out);
  return out;
}

// Everything inference computes for one video, kept for inspection.
struct SampleInference {
  std::string video_id;
  ClusterContext clusters;
  KeywordWeights keywords;
  ContextSignals signals;
  std::vector<double> saliency;
  PredictionRecord prediction;
};

inline SampleInference run_inference(const Sample& sample, const RunConfig& cfg,
                                     const SaliencyHead& head) {
  sample.validate();
  SampleInference out;
  out.video_id = sample.video_id;
  const PartitionHierarchy h = build_hierarchy(sample.clip_features);
  out.clusters = select_partition(h, cfg.target_clusters);
  out.keywords = compute_keyword_weights(sample.word_features, out.clusters.features, cfg.tau);
  out.signals = context_signals(sample.clip_features, out.clusters);
  out.saliency = saliency_scores(sample.clip_features, out.signals.representativeness, head);
  out.prediction.video_id = sample.video_id;
  out.prediction.windows = windows_from_saliency(out.saliency, sample.clip_duration_sec);
  out.prediction.saliency = out.saliency;
  return out;
}

// One seeded head serves the whole dataset, so equal (input, config) pairs
// produce byte-identical outputs.
inline std::vector<SampleInference> infer_dataset(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.samples.empty()) throw validation_error("infer_dataset: empty dataset");
  const int d = ds.samples[0].dim();
  const int p = cfg.proj_dim > 0 ? cfg.proj_dim : d;
  const SaliencyHead head = SaliencyHead::seeded(d, p, cfg.seed);
  std::vector<SampleInference> out;
  out.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) out.push_back(run_inference(s, cfg, head));
  return out;
}

inline json inference_to_signals_json(const SampleInference& inf,
                                      const std::vector<std::string>& words) {
  json j;
  j["video_id"] = inf.video_id;
  j["cluster_assignment"] = inf.clusters.assignment;
  j["cluster_count"] = inf.clusters.cluster_count;
  j["change_vector"] = inf.signals.change_vector;
  j["representativeness"] = inf.signals.representativeness;
  j["keyword_weights"] = inf.keywords.weights;
  j["words"] = words;
  j["saliency"] = inf.saliency;
  return j;
}

// Ground-truth windows for evaluation: annotated spans when present,
// otherwise contiguous runs of relevant clips in clip time.
inline std::vector<Window> gt_windows(const Sample& s) {
  if (s.moment_spans && !s.moment_spans->empty()) return *s.moment_spans;
  std::vector<Window> out;
  if (s.relevant_clips.empty()) return out;
  int run_start = s.relevant_clips[0];
  int prev = run_start;
  for (size_t k = 1; k <= s.relevant_clips.size(); ++k) {
    const bool done = k == s.relevant_clips.size();
    const int cur = done ? -1 : s.relevant_clips[k];
    if (done || cur != prev + 1) {
      out.push_back({run_start * s.clip_duration_sec, (prev + 1) * s.clip_duration_sec});
      if (!done) run_start = cur;
    }
    prev = cur;
  }
  return out;
}

struct EvalReport {
  double r1_at_050 = 0.0;
  double r1_at_070 = 0.0;
  ApResult map;
  std::optional<double> hit_at_1;  // absent when no sample carries labels
  int num_samples = 0;
  int num_labeled = 0;
};

// Scores a prediction file against a dataset. Every sample must have a
// prediction record (matched by video_id) and at least one ground-truth
// window.
inline EvalReport evaluate_predictions(const Dataset& ds,
                                       const std::vector<PredictionRecord>& preds,
                                       const RunConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.samples.empty()) throw validation_error("evaluate_predictions: empty dataset");
  std::map<std::string, const PredictionRecord*> by_id;
  for (const PredictionRecord& p : preds) {
    if (!by_id.emplace(p.video_id, &p).second)
      throw validation_error("evaluate_predictions: duplicate prediction for " + p.video_id);
  }

  std::vector<std::vector<ScoredWindow>> pw;
  std::vector<std::vector<Window>> gw;
  double hit_sum = 0.0;
  int labeled = 0;
  for (const Sample& s : ds.samples) {
    const auto it = by_id.find(s.video_id);
    if (it == by_id.end())
      throw validation_error("evaluate_predictions: no prediction for " + s.video_id);
    const PredictionRecord& p = *it->second;
    const std::vector<Window> gt = gt_windows(s);
    if (gt.empty())
      throw validation_error("evaluate_predictions: sample " + s.video_id +
                             " has no ground-truth window");
    pw.push_back(p.windows);
    gw.push_back(gt);
    if (s.saliency_labels) {
      if (p.saliency.size() != s.saliency_labels->size())
        throw validation_error("evaluate_predictions: saliency length mismatch for " + s.video_id);
      hit_sum += hit_at_1(p.saliency, *s.saliency_labels, cfg.saliency_positive_thresh);
      ++labeled;
    }
  }

  EvalReport rep;
  rep.num_samples = static_cast<int>(ds.samples.size());
  rep.num_labeled = labeled;
  rep.r1_at_050 = recall_at_1(pw, gw, 0.5);
  rep.r1_at_070 = recall_at_1(pw, gw, 0.7);
  rep.map = mean_ap(pw, gw, cfg.thresholds());
  if (labeled > 0) rep.hit_at_1 = hit_sum / labeled;
  return rep;
}

// Training batch: clip features straight from the data, text rows weighted
// once by the clustering + keyword pass. Gradient descent then moves both.
inline BatchInputs make_training_batch(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.samples.empty()) throw validation_error("make_training_batch: empty dataset");
  const int take = std::min<int>(cfg.batch_size, static_cast<int>(ds.samples.size()));
  BatchInputs batch;
  for (int i = 0; i < take; ++i) {
    const Sample& s = ds.samples[i];
    s.validate();
    const PartitionHierarchy h = build_hierarchy(s.clip_features);
    const ClusterContext ctx = select_partition(h, cfg.target_clusters);
    const KeywordWeights kw = compute_keyword_weights(s.word_features, ctx.features, cfg.tau);
    batch.samples.push_back({s.clip_features, kw.weighted_text, s.relevance_mask()});
  }
  batch.validate();
  return batch;
}

// Mean cosine between each relevant clip and its video's pooled text; the
// quantity the clip-level loss pushes up.
inline double batch_alignment(const BatchInputs& batch) {
  double sum = 0.0;
  int videos = 0;
  for (const BatchSample& s : batch.samples) {
    if (s.relevant_count() == 0) continue;
    const std::vector<double> pooled = pooled_text(s.weighted_text);
    double acc = 0.0;
    int n = 0;
    for (int j = 0; j < s.clip_features.rows(); ++j)
      if (s.relevance_mask[j]) acc += cosine_similarity(s.clip_features.row(j), pooled), ++n;
    sum += acc / n;
    ++videos;
  }
  if (videos == 0) throw validation_error("batch_alignment: no sample with relevant clips");
  return sum / videos;
}

// Mean cosine of relevant clips minus mean cosine of background clips,
// both against the pooled text. Positive when training separated them.
inline double batch_similarity_gap(const BatchInputs& batch) {
  double rel_sum = 0.0, bg_sum = 0.0;
  int rel_n = 0, bg_n = 0;
  for (const BatchSample& s : batch.samples) {
    const std::vector<double> pooled = pooled_text(s.weighted_text);
    for (int j = 0; j < s.clip_features.rows(); ++j) {
      const double c = cosine_similarity(s.clip_features.row(j), pooled);
      if (s.relevance_mask[j])
        rel_sum += c, ++rel_n;
      else
        bg_sum += c, ++bg_n;
    }
  }
  if (rel_n == 0 || bg_n == 0)
    throw validation_error("batch_similarity_gap: needs both relevant and background clips");
  return rel_sum / rel_n - bg_sum / bg_n;
}

struct StepRow {
  int step = 0;
  double l_ck = 0.0;
  double l_vk = 0.0;
  double l_kw = 0.0;
  double total = 0.0;
};

struct TrainResult {
  std::vector<StepRow> history;  // steps + 1 rows, step 0 is pre-update
  BatchInputs initial;
  BatchInputs final_batch;
  double initial_alignment = 0.0;
  double final_alignment = 0.0;
};

// Full-batch gradient descent on lambda_kw * (L_ck + L_vk) over the raw
// feature matrices. The retrieval and highlight losses have no parameters
// here, so the total column is the weighted keyword loss.
inline TrainResult train_toy(const Dataset& ds, const RunConfig& cfg,
                             PoolingMode mode = PoolingMode::MaskedMean) {
  BatchInputs batch = make_training_batch(ds, cfg);
  TrainResult res;
  res.initial = batch;
  res.initial_alignment = batch_alignment(batch);

  for (int t = 0; t <= cfg.steps; ++t) {
    const LossReport ck = clip_keyword_loss(batch);
    const LossReport vk = video_keyword_loss(batch, mode);
    const double l_kw = ck.value + vk.value;
    res.history.push_back({t, ck.value, vk.value, l_kw,
                           total_loss(0.0, 0.0, l_kw, cfg.lambda_kw)});
    if (!std::isfinite(l_kw)) throw numeric_error("train_toy: diverged at step " + std::to_string(t));
    if (t == cfg.steps) break;

    const double scale = cfg.learning_rate * cfg.lambda_kw;
    for (size_t i = 0; i < batch.samples.size(); ++i) {
      auto& fc = batch.samples[i].clip_features.data();
      auto& ft = batch.samples[i].weighted_text.data();
      const auto& gc1 = ck.gradients[i].clip_features.data();
      const auto& gc2 = vk.gradients[i].clip_features.data();
      const auto& gt1 = ck.gradients[i].weighted_text.data();
      const auto& gt2 = vk.gradients[i].weighted_text.data();
      for (size_t k = 0; k < fc.size(); ++k) fc[k] -= scale * (gc1[k] + gc2[k]);
      for (size_t k = 0; k < ft.size(); ++k) ft[k] -= scale * (gt1[k] + gt2[k]);
      if (!batch.samples[i].clip_features.all_finite() ||
          !batch.samples[i].weighted_text.all_finite())
        throw numeric_error("train_toy: diverged at step " + std::to_string(t + 1));
    }
  }

  res.final_alignment = batch_alignment(batch);
  res.final_batch = std::move(batch);
  return res;
}

struct SweepRow {
  double lambda_kw = 0.0;
  double initial_total = 0.0;
  double final_total = 0.0;
  double final_l_ck = 0.0;
  double final_l_vk = 0.0;
  double final_l_kw = 0.0;
  double alignment_gain = 0.0;
};

// Reruns the toy trainer once per weight, everything else held fixed.
inline std::vector<SweepRow> sweep_lambda(const Dataset& ds, const RunConfig& cfg,
                                          const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw validation_error("sweep_lambda: empty lambda list");
  std::vector<SweepRow> rows;
  for (double lam : lambdas) {
    if (lam < 0.0) throw validation_error("sweep_lambda: lambda_kw must be >= 0");
    RunConfig c = cfg;
    c.lambda_kw = lam;
    const TrainResult r = train_toy(ds, c);
    const StepRow& last = r.history.back();
    rows.push_back({lam, r.history.front().total, last.total, last.l_ck, last.l_vk, last.l_kw,
                    r.final_alignment - r.initial_alignment});
  }
  return rows;
}

}  // namespace vckw
