#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vckw/data.hpp"
#include "vckw/dense.hpp"
#include "vckw/rng.hpp"

namespace vckw {

// Planted-scene generator. A video is k contiguous segments; every segment
// has a unit-norm centroid assembled from word concepts, and clips are that
// centroid plus Gaussian noise. Word features are their concept vector plus
// noise. A concept occupying m segments contributes its vector scaled by
// 1/sqrt(m) to each of them, so a word spread over the whole video aligns
// weakly with every cluster while a word tied to one scene aligns strongly
// with exactly that cluster.
struct SynthConfig {
  int num_samples = 8;
  int clips = 48;       // L
  int words = 6;        // N
  int segments = 4;     // k
  int dim = 32;         // d
  double sigma = 0.1;   // expected norm of the additive noise vector
  double feature_scale = 1.0;  // applied to all features after generation
  double clip_duration_sec = 2.0;
  int target_segment = 0;  // segment whose clips form the ground-truth moment
  // Per word, the segments its concept occupies. Empty -> default layout:
  // word 0 occupies every segment, word i >= 1 occupies segment (i-1) mod k.
  std::vector<std::vector<int>> word_segments;

  void validate() const {
    if (num_samples < 1) throw validation_error("synth: num_samples must be >= 1");
    if (clips < 1 || words < 1 || dim < 1)
      throw validation_error("synth: clips, words, dim must be >= 1");
    if (segments < 1) throw validation_error("synth: segments must be >= 1");
    if (segments > clips)
      throw validation_error("synth: segments (" + std::to_string(segments) +
                             ") exceed clips (" + std::to_string(clips) + ")");
    if (sigma < 0.0) throw validation_error("synth: sigma must be >= 0");
    if (!(feature_scale > 0.0)) throw validation_error("synth: feature_scale must be positive");
    if (!(clip_duration_sec > 0.0)) throw validation_error("synth: clip_duration_sec must be positive");
    if (target_segment < 0 || target_segment >= segments)
      throw validation_error("synth: target_segment out of range");
    if (!word_segments.empty()) {
      if (static_cast<int>(word_segments.size()) != words)
        throw validation_error("synth: word_segments must list every word");
      for (const auto& segs : word_segments) {
        if (segs.empty()) throw validation_error("synth: word with no occupied segment");
        for (int s : segs)
          if (s < 0 || s >= segments)
            throw validation_error("synth: word_segments index out of range");
      }
    }
  }

  std::vector<std::vector<int>> occupancy() const {
    if (!word_segments.empty()) return word_segments;
    std::vector<std::vector<int>> occ(words);
    for (int s = 0; s < segments; ++s) occ[0].push_back(s);
    for (int w = 1; w < words; ++w) occ[w] = {(w - 1) % segments};
    return occ;
  }

  json to_json() const {
    json j;
    j["num_samples"] = num_samples;
    j["clips"] = clips;
    j["words"] = words;
    j["segments"] = segments;
    j["dim"] = dim;
    j["sigma"] = sigma;
    j["feature_scale"] = feature_scale;
    j["clip_duration_sec"] = clip_duration_sec;
    j["target_segment"] = target_segment;
    j["word_segments"] = word_segments;
    return j;
  }

  static SynthConfig from_json(const json& j) {
    SynthConfig c;
    if (j.contains("num_samples")) c.num_samples = j["num_samples"].get<int>();
    if (j.contains("clips")) c.clips = j["clips"].get<int>();
    if (j.contains("words")) c.words = j["words"].get<int>();
    if (j.contains("segments")) c.segments = j["segments"].get<int>();
    if (j.contains("dim")) c.dim = j["dim"].get<int>();
    if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
    if (j.contains("feature_scale")) c.feature_scale = j["feature_scale"].get<double>();
    if (j.contains("clip_duration_sec")) c.clip_duration_sec = j["clip_duration_sec"].get<double>();
    if (j.contains("target_segment")) c.target_segment = j["target_segment"].get<int>();
    if (j.contains("word_segments"))
      c.word_segments = j["word_segments"].get<std::vector<std::vector<int>>>();
    return c;
  }
};

namespace detail {

// Near-orthogonal unit concept vectors: modified Gram-Schmidt over seeded
// Gaussian draws, falling back to plain normalization once the dimension is
// exhausted.
inline Matrix concept_vectors(std::mt19937_64& g, int count, int dim) {
  Matrix concepts(count, dim);
  for (int i = 0; i < count; ++i) {
    std::vector<double> v = gaussian_vector(g, dim);
    for (int j = 0; j < std::min(i, dim); ++j) {
      const double proj = dot(v, concepts.row(j));
      for (int c = 0; c < dim; ++c) v[c] -= proj * concepts(j, c);
    }
    double n = norm(v);
    while (n < 1e-8) {  // degenerate draw; retry
      v = gaussian_vector(g, dim);
      n = norm(v);
    }
    for (int c = 0; c < dim; ++c) concepts(i, c) = v[c] / n;
  }
  return concepts;
}

inline std::vector<std::pair<int, int>> segment_bounds(int clips, int segments) {
  std::vector<std::pair<int, int>> bounds;
  for (int s = 0; s < segments; ++s)
    bounds.push_back({s * clips / segments, (s + 1) * clips / segments});
  return bounds;
}

}  // namespace detail

// Pure function of (config, seed).
inline Dataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 g(seed);
  const auto occ = cfg.occupancy();
  const auto bounds = detail::segment_bounds(cfg.clips, cfg.segments);

  Dataset ds;
  ds.metadata = {{"source", "synth"}, {"d", cfg.dim}, {"seed", seed}, {"config", cfg.to_json()}};

  // sigma is the expected NORM of the noise vector, not the per-coordinate
  // spread: centroids are unit vectors, so sigma = 0.1 always means a mild
  // 10% perturbation no matter how many dimensions the features have
  const double coord_noise = cfg.sigma / std::sqrt(static_cast<double>(cfg.dim));

  for (int si = 0; si < cfg.num_samples; ++si) {
    // Segments not covered by any word concept get a hidden concept of their
    // own (scenes with no query word in them).
    std::vector<std::vector<int>> segment_words(cfg.segments);
    for (int w = 0; w < cfg.words; ++w)
      for (int s : occ[w]) segment_words[s].push_back(w);
    int hidden = 0;
    for (int s = 0; s < cfg.segments; ++s)
      if (segment_words[s].empty()) ++hidden;

    const Matrix concepts = detail::concept_vectors(g, cfg.words + hidden, cfg.dim);

    Matrix centroids(cfg.segments, cfg.dim);
    int next_hidden = cfg.words;
    for (int s = 0; s < cfg.segments; ++s) {
      std::vector<double> acc(cfg.dim, 0.0);
      if (segment_words[s].empty()) {
        const auto row = concepts.row(next_hidden++);
        std::copy(row.begin(), row.end(), acc.begin());
      } else {
        for (int w : segment_words[s]) {
          const double amp = 1.0 / std::sqrt(static_cast<double>(occ[w].size()));
          for (int c = 0; c < cfg.dim; ++c) acc[c] += amp * concepts(w, c);
        }
      }
      const double n = std::max(norm(acc), kNormEps);
      for (int c = 0; c < cfg.dim; ++c) centroids(s, c) = acc[c] / n;
    }

    Sample smp;
    smp.video_id = "synth-" + std::to_string(seed) + "-" + std::to_string(si);
    smp.clip_duration_sec = cfg.clip_duration_sec;
    smp.clip_features = Matrix(cfg.clips, cfg.dim);
    std::vector<int> planted(cfg.clips, 0);
    for (int s = 0; s < cfg.segments; ++s) {
      for (int i = bounds[s].first; i < bounds[s].second; ++i) {
        planted[i] = s;
        for (int c = 0; c < cfg.dim; ++c)
          smp.clip_features(i, c) = cfg.feature_scale * (centroids(s, c) + coord_noise * gaussian(g));
      }
    }
    smp.word_features = Matrix(cfg.words, cfg.dim);
    for (int w = 0; w < cfg.words; ++w) {
      for (int c = 0; c < cfg.dim; ++c)
        smp.word_features(w, c) = cfg.feature_scale * (concepts(w, c) + coord_noise * gaussian(g));
      smp.words.push_back("word" + std::to_string(w));
    }

    const auto [t0, t1] = bounds[cfg.target_segment];
    for (int i = t0; i < t1; ++i) smp.relevant_clips.push_back(i);
    smp.moment_spans = std::vector<Window>{
        {t0 * cfg.clip_duration_sec, t1 * cfg.clip_duration_sec}};
    std::vector<int> labels(cfg.clips, 1);
    for (int i = t0; i < t1; ++i) labels[i] = 3;
    smp.saliency_labels = labels;

    json jbounds = json::array();
    for (const auto& [a, b] : bounds) jbounds.push_back({a, b});
    std::vector<int> common, specific;
    for (int w = 0; w < cfg.words; ++w) {
      if (static_cast<int>(occ[w].size()) == cfg.segments)
        common.push_back(w);
      else if (occ[w].size() == 1)
        specific.push_back(w);
    }
    smp.meta = {{"planted_labels", planted},
                {"segment_bounds", jbounds},
                {"word_segments", occ},
                {"common_words", common},
                {"specific_words", specific},
                {"target_segment", cfg.target_segment}};

    smp.validate();
    ds.samples.push_back(std::move(smp));
  }
  return ds;
}

}  // namespace vckw
