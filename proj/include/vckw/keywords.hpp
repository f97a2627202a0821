#pragma once

#include <vector>

#include "vckw/dense.hpp"
#include "vckw/errors.hpp"

namespace vckw {

// Keyword weighting: cosine similarity between words and clustered video
// features, column-wise softmax over words, max-pool over clusters. A word
// tied to a few specific clusters wins its columns decisively; a word spread
// over most clusters never dominates any column.
struct KeywordWeights {
  Matrix similarity;            // N x c
  std::vector<double> weights;  // N, entries in (0,1]
  Matrix weighted_text;         // N x d
  double tau = 0.1;
};

inline Matrix similarity_matrix(const Matrix& text_features, const Matrix& clustered_features,
                                double eps = kNormEps) {
  if (text_features.cols() != clustered_features.cols())
    throw validation_error("similarity_matrix: feature dim mismatch");
  if (text_features.rows() < 1 || clustered_features.rows() < 1)
    throw validation_error("similarity_matrix: empty inputs");
  Matrix m(text_features.rows(), clustered_features.rows());
  for (int n = 0; n < m.rows(); ++n)
    for (int k = 0; k < m.cols(); ++k)
      m(n, k) = cosine_similarity(text_features.row(n), clustered_features.row(k), eps);
  return m;
}

inline std::vector<double> keyword_weights(const Matrix& similarity, double tau) {
  return max_pool_rows(softmax_columns(similarity, tau));
}

// Row n scaled by weights[n]; exact, no renormalization.
inline Matrix apply_weights(const std::vector<double>& weights, const Matrix& text_features) {
  if (static_cast<int>(weights.size()) != text_features.rows())
    throw validation_error("apply_weights: weights length != word count");
  Matrix out = text_features;
  for (int n = 0; n < out.rows(); ++n)
    for (int c = 0; c < out.cols(); ++c) out(n, c) *= weights[n];
  return out;
}

inline KeywordWeights compute_keyword_weights(const Matrix& text_features,
                                              const Matrix& clustered_features, double tau) {
  KeywordWeights kw;
  kw.tau = tau;
  kw.similarity = similarity_matrix(text_features, clustered_features);
  kw.weights = keyword_weights(kw.similarity, tau);
  kw.weighted_text = apply_weights(kw.weights, text_features);
  return kw;
}

}  // namespace vckw
