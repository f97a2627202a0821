#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vckw/dense.hpp"
#include "vckw/errors.hpp"

namespace vckw {

// One training sample as the losses see it: clip features F^v, keyword-
// weighted text rows F^wt, and the binary relevance mask r^b over clips.
struct BatchSample {
  Matrix clip_features;                     // L_i x d
  Matrix weighted_text;                     // N_i x d
  std::vector<std::uint8_t> relevance_mask; // length L_i

  int relevant_count() const {
    int c = 0;
    for (auto m : relevance_mask) c += m != 0;
    return c;
  }
};

struct BatchInputs {
  std::vector<BatchSample> samples;

  int dim() const { return samples.empty() ? 0 : samples[0].clip_features.cols(); }

  void validate() const {
    if (samples.empty()) throw validation_error("batch: empty");
    const int d = dim();
    for (size_t i = 0; i < samples.size(); ++i) {
      const BatchSample& s = samples[i];
      const std::string who = "batch sample " + std::to_string(i);
      if (s.clip_features.rows() < 1 || s.weighted_text.rows() < 1)
        throw validation_error(who + ": empty feature matrix");
      if (s.clip_features.cols() != d || s.weighted_text.cols() != d)
        throw validation_error(who + ": feature dim mismatch");
      if (static_cast<int>(s.relevance_mask.size()) != s.clip_features.rows())
        throw validation_error(who + ": relevance mask length != clip count");
    }
  }
};

// Gradients shaped like the sample they belong to.
struct SampleGrad {
  Matrix clip_features;
  Matrix weighted_text;
};

struct LossReport {
  double value = 0.0;
  std::vector<SampleGrad> gradients;  // one per batch sample, zero where skipped
  std::vector<std::pair<int, std::string>> skipped_samples;
};

// G^wt: arithmetic mean over word rows.
inline std::vector<double> pooled_text(const Matrix& weighted_text) {
  return mean_rows(weighted_text);
}

namespace detail {

inline std::vector<SampleGrad> zero_grads(const BatchInputs& batch) {
  std::vector<SampleGrad> g;
  g.reserve(batch.samples.size());
  for (const BatchSample& s : batch.samples)
    g.push_back({Matrix(s.clip_features.rows(), s.clip_features.cols()),
                 Matrix(s.weighted_text.rows(), s.weighted_text.cols())});
  return g;
}

inline void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace detail

// Clip-keyword contrastive loss: per sample, the softmax-normalized mass of
// relevant-clip similarities against all clips,
//   term_i = -log( sum_{j in R_i} exp(s_j) / sum_{j=1..L} exp(s_j) ),
// with s_j = cos(F^v_j, G^wt). Samples with an empty relevant set are
// skipped and the average runs over the remaining B'.
inline LossReport clip_keyword_loss(const BatchInputs& batch) {
  batch.validate();
  LossReport rep;
  rep.gradients = detail::zero_grads(batch);

  struct PerSample {
    int index;
    std::vector<CosineGrad> cos;  // per clip, vs pooled text
    std::vector<double> coeff;    // d term / d s_j
  };
  std::vector<PerSample> active;

  for (size_t i = 0; i < batch.samples.size(); ++i) {
    const BatchSample& s = batch.samples[i];
    if (s.relevant_count() == 0) {
      rep.skipped_samples.push_back({static_cast<int>(i), "empty relevant set"});
      continue;
    }
    const int L = s.clip_features.rows();
    const std::vector<double> pooled = pooled_text(s.weighted_text);

    PerSample ps;
    ps.index = static_cast<int>(i);
    ps.cos.reserve(L);
    std::vector<double> sims(L);
    for (int j = 0; j < L; ++j) {
      ps.cos.push_back(cosine_similarity_grad(s.clip_features.row(j), pooled));
      sims[j] = ps.cos.back().value;
    }
    const double m = *std::max_element(sims.begin(), sims.end());
    double z_all = 0.0, z_rel = 0.0;
    std::vector<double> e(L);
    for (int j = 0; j < L; ++j) {
      e[j] = std::exp(sims[j] - m);
      z_all += e[j];
      if (s.relevance_mask[j]) z_rel += e[j];
    }
    rep.value += std::log(z_all) - std::log(z_rel);
    ps.coeff.resize(L);
    for (int j = 0; j < L; ++j)
      ps.coeff[j] = e[j] / z_all - (s.relevance_mask[j] ? e[j] / z_rel : 0.0);
    active.push_back(std::move(ps));
  }

  if (active.empty()) throw validation_error("clip_keyword_loss: every sample has an empty relevant set");
  const double inv_b = 1.0 / static_cast<double>(active.size());
  rep.value *= inv_b;

  for (const PerSample& ps : active) {
    const BatchSample& s = batch.samples[ps.index];
    SampleGrad& g = rep.gradients[ps.index];
    const int L = s.clip_features.rows();
    const int N = s.weighted_text.rows();
    std::vector<double> g_pooled(s.clip_features.cols(), 0.0);
    for (int j = 0; j < L; ++j) {
      const double c = ps.coeff[j] * inv_b;
      detail::add_scaled(g.clip_features.row(j), ps.cos[j].d_a, c);
      detail::add_scaled(g_pooled, ps.cos[j].d_b, c);
    }
    // Pooling spreads the gradient evenly over word rows.
    for (int n = 0; n < N; ++n)
      detail::add_scaled(g.weighted_text.row(n), g_pooled, 1.0 / static_cast<double>(N));
  }
  return rep;
}

// Two documented readings of the relevant-clip pooling in the video-keyword
// loss. They differ only by a positive scale on G^v, which the cosine
// removes, so loss values agree; MaskedMean is the default.
enum class PoolingMode { MaskedMean, ZeroFillMean };

// Video-keyword contrastive loss: batch-level InfoNCE between pooled
// relevant-clip features G^v and pooled weighted text G^wt,
//   term_i = -log( exp(S_ii) / sum_{j=1..B} exp(S_ji) ),  S_ji = cos(G^v_j, G^wt_i).
// A sample with an all-zero mask is an error unless skip_empty is set.
inline LossReport video_keyword_loss(const BatchInputs& batch,
                                     PoolingMode mode = PoolingMode::MaskedMean,
                                     bool skip_empty = false) {
  batch.validate();
  LossReport rep;
  rep.gradients = detail::zero_grads(batch);

  std::vector<int> kept;
  for (size_t i = 0; i < batch.samples.size(); ++i) {
    if (batch.samples[i].relevant_count() == 0) {
      if (!skip_empty)
        throw validation_error("video_keyword_loss: sample " + std::to_string(i) +
                               " has an all-zero relevance mask");
      rep.skipped_samples.push_back({static_cast<int>(i), "all-zero relevance mask"});
      continue;
    }
    kept.push_back(static_cast<int>(i));
  }
  if (kept.empty()) throw validation_error("video_keyword_loss: every sample skipped");

  const int B = static_cast<int>(kept.size());
  const int d = batch.dim();
  std::vector<std::vector<double>> g_video(B), g_text(B);
  std::vector<double> divisor(B);  // pooling denominator per video
  for (int a = 0; a < B; ++a) {
    const BatchSample& s = batch.samples[kept[a]];
    const int L = s.clip_features.rows();
    std::vector<double> sum(d, 0.0);
    for (int j = 0; j < L; ++j)
      if (s.relevance_mask[j]) detail::add_scaled(sum, s.clip_features.row(j), 1.0);
    divisor[a] = mode == PoolingMode::MaskedMean ? s.relevant_count() : L;
    for (double& v : sum) v /= divisor[a];
    g_video[a] = std::move(sum);
    g_text[a] = pooled_text(s.weighted_text);
  }

  // S[j][i] with full gradients per pair; B is small by construction.
  std::vector<std::vector<CosineGrad>> cg(B, std::vector<CosineGrad>(B));
  for (int j = 0; j < B; ++j)
    for (int i = 0; i < B; ++i) cg[j][i] = cosine_similarity_grad(g_video[j], g_text[i]);

  const double inv_b = 1.0 / static_cast<double>(B);
  std::vector<std::vector<double>> coeff(B, std::vector<double>(B));
  for (int i = 0; i < B; ++i) {
    double m = cg[0][i].value;
    for (int j = 1; j < B; ++j) m = std::max(m, cg[j][i].value);
    double z = 0.0;
    for (int j = 0; j < B; ++j) z += std::exp(cg[j][i].value - m);
    rep.value += std::log(z) - (cg[i][i].value - m);
    for (int j = 0; j < B; ++j)
      coeff[j][i] = (std::exp(cg[j][i].value - m) / z - (i == j ? 1.0 : 0.0)) * inv_b;
  }
  rep.value *= inv_b;

  for (int j = 0; j < B; ++j) {
    std::vector<double> acc_video(d, 0.0), acc_text(d, 0.0);
    for (int i = 0; i < B; ++i) {
      detail::add_scaled(acc_video, cg[j][i].d_a, coeff[j][i]);
      detail::add_scaled(acc_text, cg[i][j].d_b, coeff[i][j]);
    }
    const BatchSample& s = batch.samples[kept[j]];
    SampleGrad& g = rep.gradients[kept[j]];
    for (int l = 0; l < s.clip_features.rows(); ++l)
      if (s.relevance_mask[l])
        detail::add_scaled(g.clip_features.row(l), acc_video, 1.0 / divisor[j]);
    const int N = s.weighted_text.rows();
    for (int n = 0; n < N; ++n)
      detail::add_scaled(g.weighted_text.row(n), acc_text, 1.0 / static_cast<double>(N));
  }
  return rep;
}

inline LossReport combine_loss_reports(const LossReport& a, const LossReport& b) {
  if (a.gradients.size() != b.gradients.size())
    throw validation_error("combine_loss_reports: batch size mismatch");
  LossReport out;
  out.value = a.value + b.value;
  out.gradients = a.gradients;
  for (size_t i = 0; i < out.gradients.size(); ++i) {
    auto& gc = out.gradients[i].clip_features.data();
    auto& gt = out.gradients[i].weighted_text.data();
    const auto& bc = b.gradients[i].clip_features.data();
    const auto& bt = b.gradients[i].weighted_text.data();
    for (size_t k = 0; k < gc.size(); ++k) gc[k] += bc[k];
    for (size_t k = 0; k < gt.size(); ++k) gt[k] += bt[k];
  }
  out.skipped_samples = a.skipped_samples;
  out.skipped_samples.insert(out.skipped_samples.end(), b.skipped_samples.begin(),
                             b.skipped_samples.end());
  return out;
}

// L_kw = L_ck + L_vk.
inline LossReport keyword_loss(const BatchInputs& batch,
                               PoolingMode mode = PoolingMode::MaskedMean,
                               bool skip_empty = false) {
  return combine_loss_reports(clip_keyword_loss(batch), video_keyword_loss(batch, mode, skip_empty));
}

// L_total = L_mr + L_hd + lambda_kw * L_kw. The retrieval and highlight
// losses arrive as externally supplied scalars.
inline double total_loss(double l_mr, double l_hd, double l_kw, double lambda_kw) {
  if (!std::isfinite(l_mr) || !std::isfinite(l_hd) || !std::isfinite(l_kw) ||
      !std::isfinite(lambda_kw))
    throw numeric_error("total_loss: non-finite input");
  if (lambda_kw < 0.0) throw validation_error("total_loss: lambda_kw must be >= 0");
  return l_mr + l_hd + lambda_kw * l_kw;
}

}  // namespace vckw
