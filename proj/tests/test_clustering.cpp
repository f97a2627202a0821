#include <catch2/catch_amalgamated.hpp>

#include <queue>
#include <random>
#include <set>
#include <vector>

#include "vckw/clustering.hpp"
#include "vckw/rng.hpp"
#include "vckw/synth.hpp"

using Catch::Matchers::WithinAbs;
using namespace vckw;

namespace {

// Independent first-neighbor reference: build the link graph explicitly
// (mutual pairs, one-way picks, shared targets) and take BFS components.
std::vector<int> reference_components(const Matrix& d) {
  const int n = d.rows();
  std::vector<int> kappa(n);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (best < 0 || d(i, j) < d(i, best)) best = j;
    }
    kappa[i] = best;
  }
  std::vector<std::set<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (kappa[i] == j || kappa[j] == i || kappa[i] == kappa[j]) {
        adj[i].insert(j);
        adj[j].insert(i);
      }
    }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (comp[v] < 0) {
          comp[v] = next;
          q.push(v);
        }
    }
    ++next;
  }
  return comp;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, rev;
  for (size_t i = 0; i < a.size(); ++i) {
    const auto [f, fin] = fwd.try_emplace(a[i], b[i]);
    if (f->second != b[i]) return false;
    const auto [r, rin] = rev.try_emplace(b[i], a[i]);
    if (r->second != a[i]) return false;
  }
  return true;
}

Matrix random_distances(std::mt19937_64& g, int n) {
  Matrix d(n, n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = uniform01(g) + 1e-6;
  return d;
}

}  // namespace

TEST_CASE("temporally weighted distance hand value") {
  const Matrix f = Matrix::from_rows({{1.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}});
  const std::vector<double> times = {0.0, 1.0, 2.0, 3.0};
  const Matrix d = tw_distance_matrix(f, times, 4.0);
  // orthogonal rows, |t gap| = 2, scale 4: (1 - 0) * 2/4
  REQUIRE_THAT(d(0, 2), WithinAbs(0.5, 1e-15));
  REQUIRE(d(2, 0) == d(0, 2));
  for (int i = 0; i < 4; ++i) REQUIRE(d(i, i) == 0.0);
  REQUIRE_THROWS_AS(tw_distance_matrix(f, times, 0.0), validation_error);
  REQUIRE_THROWS_AS(tw_distance_matrix(f, {0.0, 1.0}, 4.0), validation_error);
}

TEST_CASE("time scale never changes the linking structure") {
  std::mt19937_64 g(3);
  const Matrix f = gaussian_matrix(g, 12, 5);
  std::vector<double> times(12);
  std::iota(times.begin(), times.end(), 0.0);
  const Labeling a = first_neighbor_partition(tw_distance_matrix(f, times, 12.0));
  const Labeling b = first_neighbor_partition(tw_distance_matrix(f, times, 120.0));
  REQUIRE(a.assignment == b.assignment);
}

TEST_CASE("first neighbor linking on a two-block hand case") {
  const Matrix f = Matrix::from_rows(
      {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}});
  const Labeling lab = first_neighbor_partition(tw_distance_matrix(f));
  REQUIRE(lab.cluster_count == 2);
  REQUIRE(lab.assignment == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("first neighbor components match an explicit graph oracle") {
  std::mt19937_64 g(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(uniform01(g) * 18);
    const Matrix d = random_distances(g, n);
    const Labeling lab = first_neighbor_partition(d);
    const std::vector<int> ref = reference_components(d);
    REQUIRE(same_partition(lab.assignment, ref));
  }
}

TEST_CASE("first neighbor ties resolve to the lowest index") {
  // clip 0 is equidistant from 1 and 2; the argmin must take 1
  Matrix d(3, 3, 0.0);
  d(0, 1) = d(1, 0) = 1.0;
  d(0, 2) = d(2, 0) = 1.0;
  d(1, 2) = d(2, 1) = 5.0;
  const Labeling lab = first_neighbor_partition(d);
  REQUIRE(lab.cluster_count == 1);  // 1 and 2 both pick 0 as first neighbor
  Matrix e(4, 4, 0.0);
  e(0, 1) = e(1, 0) = 1.0;
  e(2, 3) = e(3, 2) = 1.0;
  e(0, 2) = e(2, 0) = 9.0;
  e(0, 3) = e(3, 0) = 9.0;
  e(1, 2) = e(2, 1) = 9.0;
  e(1, 3) = e(3, 1) = 9.0;
  const Labeling two = first_neighbor_partition(e);
  REQUIRE(two.cluster_count == 2);
  REQUIRE(two.assignment == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("hierarchy levels shrink strictly and stay consistent") {
  std::mt19937_64 g(11);
  const Matrix f = gaussian_matrix(g, 40, 8);
  const PartitionHierarchy h = build_hierarchy(f);
  REQUIRE(h.num_clips == 40);
  REQUIRE_FALSE(h.levels.empty());
  int prev = 40;
  for (const Partition& p : h.levels) {
    REQUIRE(p.cluster_count < prev);
    REQUIRE(static_cast<int>(p.assignment.size()) == 40);
    prev = p.cluster_count;

    // means over level-0 members, ids ordered by ascending mean time
    std::vector<int> sizes(p.cluster_count, 0);
    std::vector<double> tsum(p.cluster_count, 0.0);
    Matrix sums(p.cluster_count, 8, 0.0);
    for (int i = 0; i < 40; ++i) {
      const int c = p.assignment[i];
      REQUIRE(c >= 0);
      REQUIRE(c < p.cluster_count);
      ++sizes[c];
      tsum[c] += i;
      for (int k = 0; k < 8; ++k) sums(c, k) += f(i, k);
    }
    for (int c = 0; c < p.cluster_count; ++c) {
      REQUIRE(sizes[c] > 0);
      REQUIRE_THAT(p.mean_times[c], WithinAbs(tsum[c] / sizes[c], 1e-12));
      for (int k = 0; k < 8; ++k) REQUIRE_THAT(p.means(c, k), WithinAbs(sums(c, k) / sizes[c], 1e-12));
      if (c > 0) REQUIRE(p.mean_times[c - 1] <= p.mean_times[c]);
    }
  }
  REQUIRE(h.levels.back().cluster_count == 1);

  // each level coarsens the previous one
  for (size_t l = 1; l < h.levels.size(); ++l) {
    const auto& fine = h.levels[l - 1].assignment;
    const auto& coarse = h.levels[l].assignment;
    std::map<int, int> image;
    for (int i = 0; i < 40; ++i) {
      const auto [it, inserted] = image.try_emplace(fine[i], coarse[i]);
      REQUIRE(it->second == coarse[i]);
    }
  }
}

TEST_CASE("degenerate inputs") {
  const Matrix one = Matrix::from_rows({{1.0, 2.0}});
  const PartitionHierarchy h = build_hierarchy(one);
  REQUIRE(h.levels.size() == 1);
  REQUIRE(h.levels[0].cluster_count == 1);
  REQUIRE(h.levels[0].assignment == std::vector<int>{0});

  const Matrix two = Matrix::from_rows({{1.0, 0.0}, {0.9, 0.1}});
  const PartitionHierarchy h2 = build_hierarchy(two);
  REQUIRE(h2.levels.back().cluster_count == 1);
}

TEST_CASE("zero-noise planted segments are recovered exactly") {
  SynthConfig cfg;
  cfg.num_samples = 1;
  cfg.clips = 40;
  cfg.segments = 4;
  cfg.words = 5;
  cfg.dim = 16;
  cfg.sigma = 0.0;
  const Dataset ds = synth_generate(cfg, 23);
  const Sample& s = ds.samples[0];
  const PartitionHierarchy h = build_hierarchy(s.clip_features);
  const ClusterContext ctx = select_partition(h, 4);
  REQUIRE(ctx.cluster_count == 4);
  const std::vector<int> planted = s.meta["planted_labels"].get<std::vector<int>>();
  REQUIRE(partition_purity(ctx.assignment, planted) == 1.0);
}

TEST_CASE("partition selection prefers the coarser level on ties") {
  // counts 10, 4, 2: target 3 is equidistant from 4 and 2
  std::mt19937_64 g(29);
  PartitionHierarchy h;
  h.num_clips = 20;
  for (int count : {10, 4, 2}) {
    Partition p;
    p.cluster_count = count;
    p.assignment.resize(20);
    for (int i = 0; i < 20; ++i) p.assignment[i] = i % count;
    p.means = gaussian_matrix(g, count, 3);
    p.mean_times.resize(count);
    std::iota(p.mean_times.begin(), p.mean_times.end(), 0.0);
    h.levels.push_back(std::move(p));
  }
  REQUIRE(select_partition(h, 3).cluster_count == 2);
  REQUIRE(select_partition(h, 10).cluster_count == 10);
  REQUIRE(select_partition(h, 100).cluster_count == 10);
  // default target ceil(sqrt(20)) = 5 -> closest is 4
  REQUIRE(select_partition(h).cluster_count == 4);
  REQUIRE_THROWS_AS(select_partition(h, 0), validation_error);
}

TEST_CASE("selected features are the cluster means") {
  std::mt19937_64 g(31);
  const Matrix f = gaussian_matrix(g, 18, 4);
  const PartitionHierarchy h = build_hierarchy(f);
  const ClusterContext ctx = select_partition(h);
  for (int c = 0; c < ctx.cluster_count; ++c) {
    std::vector<double> mean(4, 0.0);
    int n = 0;
    for (int i = 0; i < 18; ++i) {
      if (ctx.assignment[i] != c) continue;
      ++n;
      for (int k = 0; k < 4; ++k) mean[k] += f(i, k);
    }
    REQUIRE(n > 0);
    for (int k = 0; k < 4; ++k) REQUIRE_THAT(ctx.features(c, k), WithinAbs(mean[k] / n, 1e-12));
  }
}

TEST_CASE("purity oracle") {
  REQUIRE(partition_purity({0, 0, 1, 1}, {5, 5, 7, 7}) == 1.0);
  REQUIRE_THAT(partition_purity({0, 0, 0, 0}, {1, 1, 2, 2}), WithinAbs(0.5, 1e-15));
  REQUIRE_THROWS_AS(partition_purity({0}, {1, 2}), validation_error);
}
