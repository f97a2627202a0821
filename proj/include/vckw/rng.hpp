#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "vckw/dense.hpp"

namespace vckw {

// Uniform and gaussian draws built from raw mt19937_64 output. The standard
// <random> distributions are implementation-defined, which would break
// byte-identical outputs across toolchains.

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double gaussian(std::mt19937_64& g) {
  // Box-Muller, cosine branch only.
  const double u1 = 1.0 - uniform01(g);  // (0,1]
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::vector<double> gaussian_vector(std::mt19937_64& g, int n, double stddev = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = stddev * gaussian(g);
  return v;
}

inline Matrix gaussian_matrix(std::mt19937_64& g, int rows, int cols, double stddev = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = stddev * gaussian(g);
  return m;
}

// Fisher-Yates prefix: k distinct indices drawn from 0..n-1.
inline std::vector<int> sample_indices(std::mt19937_64& g, int n, int k) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  const int take = std::min(k, n);
  for (int i = 0; i < take; ++i) {
    const int j = i + static_cast<int>(g() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  return idx;
}

}  // namespace vckw
