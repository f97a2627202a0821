#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vckw/dense.hpp"
#include "vckw/errors.hpp"
#include "vckw/metrics.hpp"

namespace vckw {

using json = nlohmann::json;

// Shortest round-trip decimal form, locale-free. Used by every CSV writer.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

// One video-query pair: clip features F^v (L x d), word features F^t (N x d),
// and annotations. Word strings are carried for reporting only.
struct Sample {
  std::string video_id;
  Matrix clip_features;
  Matrix word_features;
  std::vector<std::string> words;
  std::vector<int> relevant_clips;  // sorted, unique, subset of 0..L-1
  std::optional<std::vector<int>> saliency_labels;
  std::optional<std::vector<Window>> moment_spans;
  double clip_duration_sec = 2.0;
  json meta = json::object();

  int num_clips() const { return clip_features.rows(); }
  int num_words() const { return word_features.rows(); }
  int dim() const { return clip_features.cols(); }

  std::vector<std::uint8_t> relevance_mask() const {
    std::vector<std::uint8_t> mask(num_clips(), 0);
    for (int idx : relevant_clips) mask[idx] = 1;
    return mask;
  }

  void validate() const {
    if (video_id.empty()) throw validation_error("sample: empty video_id");
    if (num_clips() < 1) throw validation_error(video_id + ": clip_features needs L >= 1");
    if (num_words() < 1) throw validation_error(video_id + ": word_features needs N >= 1");
    if (dim() < 1) throw validation_error(video_id + ": feature dim must be >= 1");
    if (word_features.cols() != dim())
      throw validation_error(video_id + ": word_features dim " + std::to_string(word_features.cols()) +
                             " != clip_features dim " + std::to_string(dim()));
    if (!clip_features.all_finite())
      throw validation_error(video_id + ": clip_features contains a non-finite value");
    if (!word_features.all_finite())
      throw validation_error(video_id + ": word_features contains a non-finite value");
    if (!words.empty() && static_cast<int>(words.size()) != num_words())
      throw validation_error(video_id + ": words length != N");
    for (size_t i = 0; i < relevant_clips.size(); ++i) {
      const int c = relevant_clips[i];
      if (c < 0 || c >= num_clips())
        throw validation_error(video_id + ": relevant_clips[" + std::to_string(i) + "] = " +
                               std::to_string(c) + " out of range for L = " + std::to_string(num_clips()));
      if (i > 0 && relevant_clips[i - 1] >= c)
        throw validation_error(video_id + ": relevant_clips must be sorted and unique");
    }
    if (saliency_labels && static_cast<int>(saliency_labels->size()) != num_clips())
      throw validation_error(video_id + ": saliency_labels length != L");
    if (moment_spans)
      for (const Window& w : *moment_spans)
        if (!(w.start_sec < w.end_sec))
          throw validation_error(video_id + ": moment_spans entry with start >= end");
    if (!(clip_duration_sec > 0.0) || !std::isfinite(clip_duration_sec))
      throw validation_error(video_id + ": clip_duration_sec must be positive");
  }
};

struct Dataset {
  std::vector<Sample> samples;
  json metadata = json::object();

  void validate() const {
    for (const Sample& s : samples) s.validate();
    for (size_t i = 1; i < samples.size(); ++i)
      if (samples[i].dim() != samples[0].dim())
        throw validation_error("sample " + std::to_string(i) + " (" + samples[i].video_id +
                               "): feature dim " + std::to_string(samples[i].dim()) +
                               " != dataset dim " + std::to_string(samples[0].dim()));
  }
};

namespace detail {

inline Matrix matrix_from_json(const json& j, const char* field, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw validation_error(where + ": field '" + field + "' must be a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (const json& row : j) {
    if (!row.is_array())
      throw validation_error(where + ": field '" + field + "' row is not an array");
    rows.push_back(row.get<std::vector<double>>());
    if (rows.back().size() != rows.front().size())
      throw validation_error(where + ": field '" + field + "' has ragged rows");
  }
  return Matrix::from_rows(rows);
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r)
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline const json& require(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) throw validation_error(where + ": missing field '" + field + "'");
  return *it;
}

}  // namespace detail

inline json sample_to_json(const Sample& s) {
  json j;
  j["video_id"] = s.video_id;
  j["d"] = s.dim();
  j["clip_features"] = detail::matrix_to_json(s.clip_features);
  j["word_features"] = detail::matrix_to_json(s.word_features);
  j["words"] = s.words;
  j["relevant_clips"] = s.relevant_clips;
  if (s.saliency_labels)
    j["saliency_labels"] = *s.saliency_labels;
  else
    j["saliency_labels"] = nullptr;
  if (s.moment_spans) {
    json spans = json::array();
    for (const Window& w : *s.moment_spans) spans.push_back({w.start_sec, w.end_sec});
    j["moment_spans"] = spans;
  } else {
    j["moment_spans"] = nullptr;
  }
  j["clip_duration_sec"] = s.clip_duration_sec;
  j["meta"] = s.meta;
  return j;
}

inline Sample sample_from_json(const json& j, const std::string& where) {
  Sample s;
  s.video_id = detail::require(j, "video_id", where).get<std::string>();
  s.clip_features = detail::matrix_from_json(detail::require(j, "clip_features", where),
                                             "clip_features", where);
  s.word_features = detail::matrix_from_json(detail::require(j, "word_features", where),
                                             "word_features", where);
  const int d = detail::require(j, "d", where).get<int>();
  if (d != s.clip_features.cols())
    throw validation_error(where + ": field 'd' = " + std::to_string(d) +
                           " does not match clip_features width " +
                           std::to_string(s.clip_features.cols()));
  if (auto it = j.find("words"); it != j.end() && !it->is_null())
    s.words = it->get<std::vector<std::string>>();
  if (auto it = j.find("relevant_clips"); it != j.end() && !it->is_null()) {
    s.relevant_clips = it->get<std::vector<int>>();
    std::sort(s.relevant_clips.begin(), s.relevant_clips.end());
    s.relevant_clips.erase(std::unique(s.relevant_clips.begin(), s.relevant_clips.end()),
                           s.relevant_clips.end());
  }
  if (auto it = j.find("saliency_labels"); it != j.end() && !it->is_null())
    s.saliency_labels = it->get<std::vector<int>>();
  if (auto it = j.find("moment_spans"); it != j.end() && !it->is_null()) {
    std::vector<Window> spans;
    for (const json& p : *it) {
      if (!p.is_array() || p.size() != 2)
        throw validation_error(where + ": field 'moment_spans' entries must be [start, end]");
      spans.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    s.moment_spans = std::move(spans);
  }
  s.clip_duration_sec = detail::require(j, "clip_duration_sec", where).get<double>();
  if (auto it = j.find("meta"); it != j.end() && !it->is_null()) s.meta = *it;
  return s;
}

// JSON Lines, one sample per line. Dataset.metadata never touches disk; the
// loader derives it fresh.
inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("load_dataset: cannot open " + path);
  Dataset ds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    Sample s;
    try {
      s = sample_from_json(json::parse(line), where);
    } catch (const json::exception& e) {
      throw validation_error(where + ": malformed record: " + e.what());
    }
    s.validate();
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  ds.metadata["source"] = path;
  if (!ds.samples.empty()) ds.metadata["d"] = ds.samples[0].dim();
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("save_dataset: cannot open " + path + " for writing");
  for (const Sample& s : ds.samples) out << sample_to_json(s).dump() << "\n";
  if (!out) throw validation_error("save_dataset: write failed for " + path);
}

struct PredictionRecord {
  std::string video_id;
  std::vector<ScoredWindow> windows;  // kept sorted by descending score
  std::vector<double> saliency;
  bool operator==(const PredictionRecord&) const = default;
};

inline void sort_windows(std::vector<ScoredWindow>& windows) {
  std::stable_sort(windows.begin(), windows.end(),
                   [](const ScoredWindow& a, const ScoredWindow& b) { return a.score > b.score; });
}

inline void save_predictions(const std::vector<PredictionRecord>& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("save_predictions: cannot open " + path + " for writing");
  for (const PredictionRecord& p : preds) {
    std::vector<ScoredWindow> windows = p.windows;
    sort_windows(windows);
    json w = json::array();
    for (const ScoredWindow& sw : windows) w.push_back({sw.start_sec, sw.end_sec, sw.score});
    json j;
    j["video_id"] = p.video_id;
    j["pred_relevant_windows"] = w;
    j["pred_saliency_scores"] = p.saliency;
    out << j.dump() << "\n";
  }
  if (!out) throw validation_error("save_predictions: write failed for " + path);
}

inline std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("load_predictions: cannot open " + path);
  std::vector<PredictionRecord> preds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    try {
      const json j = json::parse(line);
      PredictionRecord p;
      p.video_id = detail::require(j, "video_id", where).get<std::string>();
      for (const json& w : detail::require(j, "pred_relevant_windows", where)) {
        if (!w.is_array() || w.size() != 3)
          throw validation_error(where + ": field 'pred_relevant_windows' entries must be [st, ed, score]");
        p.windows.push_back({w[0].get<double>(), w[1].get<double>(), w[2].get<double>()});
      }
      p.saliency = detail::require(j, "pred_saliency_scores", where).get<std::vector<double>>();
      preds.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw validation_error(where + ": malformed record: " + e.what());
    }
  }
  return preds;
}

}  // namespace vckw
