#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "vckw/dense.hpp"
#include "vckw/errors.hpp"

namespace vckw {

// Assignment of items to clusters, ids 0..cluster_count-1.
struct Labeling {
  std::vector<int> assignment;
  int cluster_count = 0;
};

// One level of the hierarchy over the original clips. Means and mean times
// are always computed from level-0 members, and ids are ordered by ascending
// mean time index.
struct Partition {
  std::vector<int> assignment;
  int cluster_count = 0;
  Matrix means;                    // cluster_count x d
  std::vector<double> mean_times;  // cluster_count
};

struct PartitionHierarchy {
  std::vector<Partition> levels;  // finest first, strictly decreasing counts
  int num_clips = 0;
};

// The cluster vector C and clustered features F^cv for a chosen level.
struct ClusterContext {
  std::vector<int> assignment;
  int cluster_count = 0;
  Matrix features;  // cluster_count x d
};

// Feature distance scaled by normalized temporal gap:
//   D[i][j] = (1 - cos(f_i, f_j)) * |t_i - t_j| / time_scale.
// The scale is a constant across pairs, so it never changes first-neighbor
// structure; it keeps reported distances comparable across levels.
inline Matrix tw_distance_matrix(const Matrix& features, const std::vector<double>& times,
                                 double time_scale, double eps = kNormEps) {
  const int n = features.rows();
  if (n < 2) throw validation_error("tw_distance_matrix: needs at least 2 rows");
  if (static_cast<int>(times.size()) != n)
    throw validation_error("tw_distance_matrix: times length mismatch");
  if (!(time_scale > 0.0)) throw validation_error("tw_distance_matrix: time_scale must be positive");
  Matrix d(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double feat = 1.0 - cosine_similarity(features.row(i), features.row(j), eps);
      const double gap = std::abs(times[i] - times[j]) / time_scale;
      d(i, j) = d(j, i) = feat * gap;
    }
  }
  return d;
}

inline Matrix tw_distance_matrix(const Matrix& clip_features, double eps = kNormEps) {
  std::vector<double> times(clip_features.rows());
  std::iota(times.begin(), times.end(), 0.0);
  return tw_distance_matrix(clip_features, times, static_cast<double>(clip_features.rows()), eps);
}

// First-neighbor linking: kappa(i) = argmin_{j != i} D[i][j] (ties -> lowest
// index); i and j join iff kappa(i)=j, kappa(j)=i, or kappa(i)=kappa(j).
// Clusters are the connected components of that graph, relabeled in
// ascending first-member order.
inline Labeling first_neighbor_partition(const Matrix& distances) {
  const int n = distances.rows();
  if (n < 2 || distances.cols() != n)
    throw validation_error("first_neighbor_partition: needs a square matrix with n >= 2");

  std::vector<int> nearest(n);
  for (int i = 0; i < n; ++i) {
    int best = i == 0 ? 1 : 0;
    for (int j = 0; j < n; ++j)
      if (j != i && distances(i, j) < distances(i, best)) best = j;
    nearest[i] = best;
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  // Joining every i with kappa(i) covers all three link cases: shared first
  // neighbors land in one component through their common target.
  for (int i = 0; i < n; ++i) unite(i, nearest[i]);

  Labeling lab;
  lab.assignment.assign(n, -1);
  std::map<int, int> id_of_root;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    auto [it, inserted] = id_of_root.try_emplace(r, static_cast<int>(id_of_root.size()));
    lab.assignment[i] = it->second;
  }
  lab.cluster_count = static_cast<int>(id_of_root.size());
  return lab;
}

namespace detail {

// Build a level from a clip assignment: means and mean times over level-0
// members, ids reordered by ascending mean time (first-member tiebreak).
inline Partition make_partition(const Matrix& clip_features, const std::vector<int>& assignment,
                                int count) {
  const int n = clip_features.rows();
  std::vector<int> sizes(count, 0);
  std::vector<double> times(count, 0.0);
  std::vector<int> first_member(count, n);
  Matrix sums(count, clip_features.cols(), 0.0);
  for (int i = 0; i < n; ++i) {
    const int c = assignment[i];
    ++sizes[c];
    times[c] += i;
    first_member[c] = std::min(first_member[c], i);
    for (int k = 0; k < clip_features.cols(); ++k) sums(c, k) += clip_features(i, k);
  }
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ta = times[a] / sizes[a], tb = times[b] / sizes[b];
    if (ta != tb) return ta < tb;
    return first_member[a] < first_member[b];
  });
  std::vector<int> remap(count);
  for (int r = 0; r < count; ++r) remap[order[r]] = r;

  Partition p;
  p.cluster_count = count;
  p.assignment.resize(n);
  for (int i = 0; i < n; ++i) p.assignment[i] = remap[assignment[i]];
  p.means = Matrix(count, clip_features.cols());
  p.mean_times.resize(count);
  for (int c = 0; c < count; ++c) {
    const int src = order[c];
    p.mean_times[c] = times[src] / sizes[src];
    for (int k = 0; k < clip_features.cols(); ++k) p.means(c, k) = sums(src, k) / sizes[src];
  }
  return p;
}

}  // namespace detail

// Recursive first-neighbor clustering: link clips, replace clusters by their
// mean feature and mean time index, repeat until one cluster remains.
inline PartitionHierarchy build_hierarchy(const Matrix& clip_features) {
  const int n = clip_features.rows();
  if (n < 1) throw validation_error("build_hierarchy: empty input");
  PartitionHierarchy h;
  h.num_clips = n;

  if (n == 1) {
    h.levels.push_back(detail::make_partition(clip_features, {0}, 1));
    return h;
  }

  std::vector<int> current(n);
  std::iota(current.begin(), current.end(), 0);
  int count = n;
  Matrix means = clip_features;
  std::vector<double> mean_times(n);
  std::iota(mean_times.begin(), mean_times.end(), 0.0);

  while (count > 1) {
    const Matrix d = tw_distance_matrix(means, mean_times, static_cast<double>(n));
    const Labeling lab = first_neighbor_partition(d);
    if (lab.cluster_count >= count) break;  // no merge; cannot happen with a mutual pair, kept as a stop
    std::vector<int> next(n);
    for (int i = 0; i < n; ++i) next[i] = lab.assignment[current[i]];
    Partition level = detail::make_partition(clip_features, next, lab.cluster_count);
    current = level.assignment;
    count = level.cluster_count;
    means = level.means;
    mean_times = level.mean_times;
    h.levels.push_back(std::move(level));
  }
  return h;
}

// Level whose cluster count is closest to the target (ties -> the coarser
// level). Default target: ceil(sqrt(L)).
inline ClusterContext select_partition(const PartitionHierarchy& h,
                                       std::optional<int> target_clusters = std::nullopt) {
  if (h.levels.empty()) throw validation_error("select_partition: empty hierarchy");
  const int target = target_clusters
                         ? *target_clusters
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(h.num_clips))));
  if (target < 1) throw validation_error("select_partition: target_clusters must be >= 1");
  size_t best = 0;
  for (size_t i = 1; i < h.levels.size(); ++i) {
    const int cur = std::abs(h.levels[i].cluster_count - target);
    const int prev = std::abs(h.levels[best].cluster_count - target);
    if (cur <= prev) best = i;
  }
  const Partition& p = h.levels[best];
  return {p.assignment, p.cluster_count, p.means};
}

// Fraction of clips whose cluster's majority planted label matches their own.
inline double partition_purity(const std::vector<int>& assignment, const std::vector<int>& labels) {
  if (assignment.size() != labels.size() || assignment.empty())
    throw validation_error("partition_purity: length mismatch");
  std::map<int, std::map<int, int>> counts;
  for (size_t i = 0; i < assignment.size(); ++i) ++counts[assignment[i]][labels[i]];
  std::map<int, int> majority;
  for (const auto& [cluster, hist] : counts) {
    int best_label = hist.begin()->first, best = 0;
    for (const auto& [label, c] : hist)
      if (c > best) best = c, best_label = label;
    majority[cluster] = best_label;
  }
  int ok = 0;
  for (size_t i = 0; i < assignment.size(); ++i)
    if (labels[i] == majority[assignment[i]]) ++ok;
  return static_cast<double>(ok) / static_cast<double>(assignment.size());
}

}  // namespace vckw
