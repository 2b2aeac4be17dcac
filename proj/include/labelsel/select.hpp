#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelsel/cluster.hpp"
#include "labelsel/ingest.hpp"

namespace labelsel {

enum class Clusterer { KMeans, KMeansPlusPlus, Bisecting, BisectingPlusPlus };
enum class SelectionMethod { ClusterSelect, Random };
enum class SelectionMode { Imbalanced, Balanced };

/// The labelled set: distinct row positions into the source matrix, ascending.
struct SelectionResult {
  std::vector<std::size_t> indices;
  SelectionMethod method = SelectionMethod::Random;
  SelectionMode mode = SelectionMode::Imbalanced;
  Seed seed = 0;
  std::optional<Clusterer> clusterer;
  std::optional<std::map<ClassIndex, std::size_t>> per_class_counts;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

/// Cluster-select output with the clustering that produced it.
/// `representatives[c]` is the row chosen for cluster c.
struct ClusterSelection {
  SelectionResult result;
  ClusterModel model;
  std::vector<std::size_t> representatives;
};

ClusterModel run_clusterer(const EmbeddingMatrix& m, std::size_t k, Clusterer clusterer,
                           const ClusterParams& params, Seed seed);

/// One row per cluster: the member of cluster c nearest to centroid c
/// (members of other clusters are never considered; ties to lowest index).
std::vector<std::size_t> nearest_members(const EmbeddingMatrix& m, const ClusterModel& model);

ClusterSelection select_by_clustering_detailed(const EmbeddingMatrix& m, std::size_t n, Clusterer clusterer,
                                               const ClusterParams& params, Seed seed);
SelectionResult select_by_clustering(const EmbeddingMatrix& m, std::size_t n, Clusterer clusterer,
                                     const ClusterParams& params, Seed seed);

/// Per-class quotas: floor(n/c) each, and one extra for the first n mod c classes.
std::vector<std::size_t> balanced_quotas(std::size_t n, std::size_t classes);

SelectionResult select_balanced(const EmbeddingMatrix& m, const LabelAssignment& labels, std::size_t n,
                                Clusterer clusterer, const ClusterParams& params, Seed seed);

SelectionResult select_random(std::size_t population, std::size_t n, Seed seed);

/// Per-class uniform sampling over the rows of `m` under the balanced quota rule.
SelectionResult select_random_balanced(const EmbeddingMatrix& m, const LabelAssignment& labels, std::size_t n,
                                       Seed seed);

/// Fills `per_class_counts` from the labels of the selected rows.
void attach_class_counts(SelectionResult& sel, const EmbeddingMatrix& m, const LabelAssignment& labels);

std::string_view to_string(Clusterer c) noexcept;
std::string_view to_string(SelectionMethod m) noexcept;
std::string_view to_string(SelectionMode m) noexcept;
Clusterer parse_clusterer(std::string_view text);
SelectionMethod parse_selection_method(std::string_view text);
SelectionMode parse_selection_mode(std::string_view text);

}  // namespace labelsel
