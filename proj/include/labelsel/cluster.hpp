#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "labelsel/ingest.hpp"
#include "labelsel/rng.hpp"

namespace labelsel {

enum class PlusPlusVariant { GreedyFarthest, D2Sampling };
enum class InitMethod { Random, PlusPlus };

struct ClusterParams {
  std::size_t max_iters = 300;
  double rel_tol = 1e-6;  // stop when relative WCSS improvement drops below this
  std::size_t restarts = 10;
  PlusPlusVariant plusplus_variant = PlusPlusVariant::GreedyFarthest;
};

void validate(const ClusterParams& params);

/// Result of a clustering run. Centroids are row-major k x dim.
struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;
  std::vector<std::size_t> assignment;
  double wcss = 0.0;
  /// WCSS after each assignment step of the winning run (Lloyd runs only; one
  /// entry per iteration).
  std::vector<double> wcss_trace;
  /// WCSS of every restart, in restart order.
  std::vector<double> restart_wcss;

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

double squared_distance(std::span<const float> x, std::span<const double> c) noexcept;

/// k distinct row positions drawn uniformly without replacement.
std::vector<std::size_t> init_random(const EmbeddingMatrix& m, std::size_t k, Seed seed);

/// ++ seeding. The first centroid is a uniform draw; see `init_plusplus_from`.
std::vector<std::size_t> init_plusplus(const EmbeddingMatrix& m, std::size_t k, Seed seed,
                                       PlusPlusVariant variant = PlusPlusVariant::GreedyFarthest);

/// ++ seeding with a fixed first centroid. GreedyFarthest picks, among the
/// rows not yet chosen, the one maximizing its minimum distance to the chosen
/// rows (ties to the lowest index). D2Sampling draws proportionally to the
/// squared minimum distance, falling back to the lowest unchosen index when
/// every distance is zero.
std::vector<std::size_t> init_plusplus_from(const EmbeddingMatrix& m, std::size_t k, std::size_t first,
                                            PlusPlusVariant variant, Rng& rng);

ClusterModel kmeans(const EmbeddingMatrix& m, std::size_t k, InitMethod init, const ClusterParams& params,
                    Seed seed);

/// Divisive clustering: repeatedly 2-means-splits the cluster with the largest
/// WCSS contribution. Leaves are numbered in creation order; a final pass
/// reassigns every row to its nearest leaf centroid.
ClusterModel bisecting_kmeans(const EmbeddingMatrix& m, std::size_t k, InitMethod init,
                              const ClusterParams& params, Seed seed);

double wcss(const EmbeddingMatrix& m, const ClusterModel& model);

/// Index of the nearest centroid, ties to the lowest index.
std::size_t nearest_centroid(std::span<const float> x, const std::vector<double>& centroids, std::size_t k);

std::string_view to_string(PlusPlusVariant v) noexcept;
PlusPlusVariant parse_plusplus_variant(std::string_view text);

}  // namespace labelsel
