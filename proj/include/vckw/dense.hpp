#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vckw/errors.hpp"

namespace vckw {

// Norm guard: below any meaningful feature norm, above denormal noise.
inline constexpr double kNormEps = 1e-12;

// Dense row-major matrix of doubles. All heavier math in this library is
// written against this one type; double precision keeps finite-difference
// gradient checks meaningful at 1e-4 relative error.
class Matrix {
public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw validation_error("Matrix: negative shape");
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows(); ++r) {
      if (static_cast<int>(rows[r].size()) != m.cols())
        throw validation_error("Matrix::from_rows: ragged rows");
      std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  std::span<double> row(int r) { return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Matrix&) const = default;

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// cos(a,b) with guarded norms, clamped to [-1,1] against rounding.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b,
                                double eps = kNormEps) {
  if (a.size() != b.size()) throw validation_error("cosine_similarity: length mismatch");
  if (a.empty()) throw validation_error("cosine_similarity: empty vectors");
  const double na = std::max(norm(a), eps);
  const double nb = std::max(norm(b), eps);
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// Value and partial derivatives of the guarded cosine. When a norm sits at
// the eps floor the corresponding normalizer is constant, so only the dot
// term contributes.
struct CosineGrad {
  double value = 0.0;
  std::vector<double> d_a;
  std::vector<double> d_b;
};

inline CosineGrad cosine_similarity_grad(std::span<const double> a, std::span<const double> b,
                                         double eps = kNormEps) {
  if (a.size() != b.size()) throw validation_error("cosine_similarity_grad: length mismatch");
  const double ra = norm(a), rb = norm(b);
  const double na = std::max(ra, eps), nb = std::max(rb, eps);
  const double d = dot(a, b);
  CosineGrad g;
  g.value = std::clamp(d / (na * nb), -1.0, 1.0);
  g.d_a.resize(a.size());
  g.d_b.resize(b.size());
  // at a degenerate (near-zero) vector the similarity is pinned to 0, so the
  // gradient is taken as flat rather than the exploding 1/eps direction
  if (ra <= eps || rb <= eps) return g;
  const double inv = 1.0 / (na * nb);
  const double ca = d / (na * na * nb * ra);
  const double cb = d / (na * nb * nb * rb);
  for (size_t i = 0; i < a.size(); ++i) {
    g.d_a[i] = b[i] * inv - ca * a[i];
    g.d_b[i] = a[i] * inv - cb * b[i];
  }
  return g;
}

// Shift-stabilized column-wise softmax: column k maps to
// exp(M[n,k]/tau - max_n M[n,k]/tau), normalized over n.
inline Matrix softmax_columns(const Matrix& m, double tau) {
  if (tau <= 0.0) throw validation_error("softmax_columns: tau must be positive");
  Matrix out(m.rows(), m.cols());
  for (int c = 0; c < m.cols(); ++c) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < m.rows(); ++r) mx = std::max(mx, m(r, c) / tau);
    double z = 0.0;
    for (int r = 0; r < m.rows(); ++r) {
      out(r, c) = std::exp(m(r, c) / tau - mx);
      z += out(r, c);
    }
    for (int r = 0; r < m.rows(); ++r) out(r, c) /= z;
  }
  return out;
}

// Per-row maximum over columns.
inline std::vector<double> max_pool_rows(const Matrix& m) {
  if (m.cols() < 1) throw validation_error("max_pool_rows: needs at least one column");
  std::vector<double> out(m.rows());
  for (int r = 0; r < m.rows(); ++r) {
    double mx = m(r, 0);
    for (int c = 1; c < m.cols(); ++c) mx = std::max(mx, m(r, c));
    out[r] = mx;
  }
  return out;
}

inline std::vector<double> mean_rows(const Matrix& m) {
  if (m.rows() < 1) throw validation_error("mean_rows: empty matrix");
  std::vector<double> out(m.cols(), 0.0);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[c] += m(r, c);
  for (double& v : out) v /= m.rows();
  return out;
}

// Mean of the rows where mask=1; divides by the count of ones, not by the
// row total.
inline std::vector<double> masked_mean_rows(const Matrix& m, const std::vector<std::uint8_t>& mask) {
  if (static_cast<int>(mask.size()) != m.rows())
    throw validation_error("masked_mean_rows: mask length " + std::to_string(mask.size()) +
                           " != rows " + std::to_string(m.rows()));
  int count = 0;
  std::vector<double> out(m.cols(), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    if (!mask[r]) continue;
    ++count;
    for (int c = 0; c < m.cols(); ++c) out[c] += m(r, c);
  }
  if (count == 0) throw validation_error("masked_mean_rows: empty relevant set (all-zero mask)");
  for (double& v : out) v /= count;
  return out;
}

}  // namespace vckw
