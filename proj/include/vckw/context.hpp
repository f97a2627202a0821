#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vckw/clustering.hpp"
#include "vckw/dense.hpp"
#include "vckw/errors.hpp"
#include "vckw/rng.hpp"

namespace vckw {

// Per-clip prediction signals derived from the cluster assignment.
struct ContextSignals {
  std::vector<int> change_vector;          // C^m, binary, last entry 0
  std::vector<double> representativeness;  // C^h, entries in [-1, 1]
};

// out[i] = 1 iff the cluster id changes between clip i and i+1; the final
// entry is 0 so the vector stays clip-aligned.
inline std::vector<int> context_change_vector(const std::vector<int>& assignment) {
  if (assignment.empty()) throw validation_error("context_change_vector: empty assignment");
  std::vector<int> out(assignment.size(), 0);
  for (size_t i = 0; i + 1 < assignment.size(); ++i)
    out[i] = assignment[i] != assignment[i + 1] ? 1 : 0;
  return out;
}

// out[i] = cos(F^v[i], F^cv[C[i]]): how well each clip represents its cluster.
inline std::vector<double> representativeness_vector(const Matrix& clip_features,
                                                     const ClusterContext& ctx) {
  if (static_cast<int>(ctx.assignment.size()) != clip_features.rows())
    throw validation_error("representativeness_vector: assignment length != clip count");
  if (ctx.features.cols() != clip_features.cols())
    throw validation_error("representativeness_vector: feature dim mismatch");
  std::vector<double> out(clip_features.rows());
  for (int i = 0; i < clip_features.rows(); ++i) {
    const int c = ctx.assignment[i];
    if (c < 0 || c >= ctx.features.rows())
      throw validation_error("representativeness_vector: assignment id out of range");
    out[i] = cosine_similarity(clip_features.row(i), ctx.features.row(c));
  }
  return out;
}

inline ContextSignals context_signals(const Matrix& clip_features, const ClusterContext& ctx) {
  return {context_change_vector(ctx.assignment), representativeness_vector(clip_features, ctx)};
}

// Projection head for saliency scoring over context-aware video tokens.
struct SaliencyHead {
  std::vector<double> saliency_token;  // T^s, length d
  Matrix proj_token;                   // w^s, p x d
  Matrix proj_video;                   // w^cv, p x (d+1)
  int proj_dim = 0;

  // Zero-mean Gaussian parameters, stddev 1/sqrt(d), fully seeded.
  static SaliencyHead seeded(int dim, int proj_dim, std::uint64_t seed) {
    if (dim < 1 || proj_dim < 1) throw validation_error("SaliencyHead: dim and proj_dim must be >= 1");
    std::mt19937_64 g(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    SaliencyHead h;
    h.proj_dim = proj_dim;
    h.saliency_token = gaussian_vector(g, dim, scale);
    h.proj_token = gaussian_matrix(g, proj_dim, dim, scale);
    h.proj_video = gaussian_matrix(g, proj_dim, dim + 1, scale);
    return h;
  }
};

// S[i] = dot(w^s T^s, w^cv T^cv[i]) / sqrt(p), with T^cv[i] = [T^v[i] | C^h[i]].
inline std::vector<double> saliency_scores(const Matrix& video_tokens,
                                           const std::vector<double>& representativeness,
                                           const SaliencyHead& head) {
  const int L = video_tokens.rows();
  const int d = video_tokens.cols();
  if (static_cast<int>(representativeness.size()) != L)
    throw validation_error("saliency_scores: representativeness length != clip count");
  if (head.proj_token.rows() != head.proj_dim || head.proj_token.cols() != d ||
      head.proj_video.rows() != head.proj_dim || head.proj_video.cols() != d + 1 ||
      static_cast<int>(head.saliency_token.size()) != d)
    throw validation_error("saliency_scores: head shapes inconsistent with tokens");

  std::vector<double> projected_token(head.proj_dim, 0.0);
  for (int p = 0; p < head.proj_dim; ++p)
    projected_token[p] = dot(head.proj_token.row(p), head.saliency_token);

  const double inv_sqrt_p = 1.0 / std::sqrt(static_cast<double>(head.proj_dim));
  std::vector<double> scores(L, 0.0);
  for (int i = 0; i < L; ++i) {
    double s = 0.0;
    for (int p = 0; p < head.proj_dim; ++p) {
      double v = head.proj_video(p, d) * representativeness[i];
      for (int c = 0; c < d; ++c) v += head.proj_video(p, c) * video_tokens(i, c);
      s += projected_token[p] * v;
    }
    scores[i] = s * inv_sqrt_p;
  }
  return scores;
}

// Anchor embeddings seeded from the change vector: C^m is resampled to
// num_queries bins (max within each bin, empty bins
// read 0), and each bin value scales one seeded projection row. One concrete
// reading of an under-specified mapping; kept deterministic and exported for
// downstream decoders.
inline Matrix anchor_init(const std::vector<int>& change_vector, int num_queries, int dim,
                          std::uint64_t seed = 0) {
  if (num_queries < 1) throw validation_error("anchor_init: num_queries must be >= 1");
  if (dim < 1) throw validation_error("anchor_init: dim must be >= 1");
  if (change_vector.empty()) throw validation_error("anchor_init: empty change vector");
  const int L = static_cast<int>(change_vector.size());
  std::vector<int> bins(num_queries, 0);
  for (int i = 0; i < L; ++i) {
    const int q = static_cast<int>(static_cast<long long>(i) * num_queries / L);
    bins[q] = std::max(bins[q], change_vector[i]);
  }
  std::mt19937_64 g(seed);
  const std::vector<double> row = gaussian_vector(g, dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  Matrix out(num_queries, dim);
  for (int q = 0; q < num_queries; ++q)
    for (int c = 0; c < dim; ++c) out(q, c) = bins[q] * row[c];
  return out;
}

}  // namespace vckw
