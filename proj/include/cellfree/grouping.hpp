#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "cellfree/core.hpp"
#include "cellfree/rng.hpp"

namespace cellfree {

/// Partition of users into the centralized set K_c and the distributed set
/// K_d. The sets are disjoint; their union may be smaller than {0..K-1} when
/// fronthaul limits force users to be dropped.
struct Grouping {
  std::vector<int> centralized;
  std::vector<int> distributed;

  int kc() const { return static_cast<int>(centralized.size()); }
  int kd() const { return static_cast<int>(distributed.size()); }
  int served() const { return kc() + kd(); }
};

/// Cosine distance 1 - <b1,b2>/(|b1||b2|) between two large-scale fading
/// fingerprints. Zero for parallel vectors, 1 for orthogonal ones.
inline double cosine_distance(const Vector& b1, const Vector& b2) {
  const double n1 = b1.norm();
  const double n2 = b2.norm();
  if (n1 == 0.0 || n2 == 0.0)
    throw std::domain_error("cosine_distance: zero vector");
  return 1.0 - b1.dot(b2) / (n1 * n2);
}

namespace detail {

inline double mean_pairwise_cosine(const Matrix& beta,
                                   const std::vector<int>& members) {
  if (members.size() < 2) return 0.0;
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < members.size(); ++i)
    for (size_t j = i + 1; j < members.size(); ++j) {
      sum += cosine_distance(beta.col(members[i]), beta.col(members[j]));
      ++count;
    }
  return sum / count;
}

}  // namespace detail

/// Modified two-cluster K-means on the user fingerprints (columns of beta)
/// under the cosine distance:
///   1. centroids start at the pair of users with maximum cosine distance;
///   2. users are assigned to the nearest centroid;
///   3. centroids are recomputed as arithmetic means of member fingerprints;
///   4. repeat to a fixed point (at most 100 iterations);
///   5. the cluster with the smaller mean intra-cluster pairwise cosine
///      distance (the most correlated users) becomes the centralized one;
///   6. all users are ranked by cosine distance to that cluster's centroid,
///      ascending, and the top k_c form the centralized set.
/// Fully deterministic; the seed parameter is reserved.
inline Grouping kmeans_group(const Matrix& beta, int k_c,
                             std::uint64_t /*seed*/ = 0) {
  const int k_total = static_cast<int>(beta.cols());
  if (k_c < 0 || k_c > k_total)
    throw std::invalid_argument("kmeans_group: k_c out of range");

  Grouping grouping;
  if (k_c == 0) {
    grouping.distributed.resize(k_total);
    std::iota(grouping.distributed.begin(), grouping.distributed.end(), 0);
    return grouping;
  }
  if (k_c == k_total) {
    grouping.centralized.resize(k_total);
    std::iota(grouping.centralized.begin(), grouping.centralized.end(), 0);
    return grouping;
  }

  // Farthest pair initialization.
  int init_a = 0, init_b = 1;
  double best = -1.0;
  for (int i = 0; i < k_total; ++i)
    for (int j = i + 1; j < k_total; ++j) {
      const double d = cosine_distance(beta.col(i), beta.col(j));
      if (d > best) {
        best = d;
        init_a = i;
        init_b = j;
      }
    }
  Vector centroid[2] = {beta.col(init_a), beta.col(init_b)};

  std::vector<int> assign(k_total, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int k = 0; k < k_total; ++k) {
      const double d0 = cosine_distance(beta.col(k), centroid[0]);
      const double d1 = cosine_distance(beta.col(k), centroid[1]);
      const int a = d1 < d0 ? 1 : 0;
      if (a != assign[k]) {
        assign[k] = a;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < 2; ++c) {
      Vector sum = Vector::Zero(beta.rows());
      int n = 0;
      for (int k = 0; k < k_total; ++k)
        if (assign[k] == c) {
          sum += beta.col(k);
          ++n;
        }
      if (n > 0) centroid[c] = sum / n;  // empty cluster keeps its centroid
    }
  }

  std::vector<int> members[2];
  for (int k = 0; k < k_total; ++k) members[assign[k]].push_back(k);
  int chosen;
  if (members[0].empty())
    chosen = 1;
  else if (members[1].empty())
    chosen = 0;
  else {
    const double m0 = detail::mean_pairwise_cosine(beta, members[0]);
    const double m1 = detail::mean_pairwise_cosine(beta, members[1]);
    chosen = m1 < m0 ? 1 : 0;
  }

  std::vector<int> order(k_total);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(k_total);
  for (int k = 0; k < k_total; ++k)
    dist[k] = cosine_distance(beta.col(k), centroid[chosen]);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dist[a] < dist[b]; });

  grouping.centralized.assign(order.begin(), order.begin() + k_c);
  std::sort(grouping.centralized.begin(), grouping.centralized.end());
  for (int k = 0; k < k_total; ++k)
    if (std::find(grouping.centralized.begin(), grouping.centralized.end(),
                  k) == grouping.centralized.end())
      grouping.distributed.push_back(k);
  return grouping;
}

/// LSF heuristic: rank users by total channel gain sum_m beta_mk and take
/// the top k_c for centralized ZF. Ties broken by user index.
inline Grouping lsf_group(const Matrix& beta, int k_c) {
  const int k_total = static_cast<int>(beta.cols());
  if (k_c < 0 || k_c > k_total)
    throw std::invalid_argument("lsf_group: k_c out of range");
  Vector gains = beta.colwise().sum();
  std::vector<int> order(k_total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gains[a] > gains[b]; });
  Grouping grouping;
  grouping.centralized.assign(order.begin(), order.begin() + k_c);
  std::sort(grouping.centralized.begin(), grouping.centralized.end());
  grouping.distributed.assign(order.begin() + k_c, order.end());
  std::sort(grouping.distributed.begin(), grouping.distributed.end());
  return grouping;
}

/// Uniformly random k_c-subset as the centralized set; deterministic per
/// seed.
inline Grouping random_group(int k_total, int k_c, std::uint64_t seed) {
  if (k_c < 0 || k_c > k_total)
    throw std::invalid_argument("random_group: k_c out of range");
  std::vector<int> order(k_total);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Grouping grouping;
  grouping.centralized.assign(order.begin(), order.begin() + k_c);
  std::sort(grouping.centralized.begin(), grouping.centralized.end());
  grouping.distributed.assign(order.begin() + k_c, order.end());
  std::sort(grouping.distributed.begin(), grouping.distributed.end());
  return grouping;
}

}  // namespace cellfree
