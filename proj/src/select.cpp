#include "labelsel/select.hpp"

#include <algorithm>
#include <limits>

namespace labelsel {

namespace {

// Row positions of each class, ascending.
std::vector<std::vector<std::size_t>> rows_by_class(const EmbeddingMatrix& m, const LabelAssignment& labels) {
  std::vector<std::vector<std::size_t>> out(labels.classes);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto it = labels.labels.find(m.ids()[i]);
    if (it == labels.labels.end()) continue;
    out[it->second].push_back(i);
  }
  return out;
}

void check_balanced_inputs(const LabelAssignment& labels, std::size_t n,
                           const std::vector<std::vector<std::size_t>>& members,
                           const std::vector<std::size_t>& quotas) {
  if (n < labels.classes) {
    throw Error(Errc::NLessThanClassCount,
                "n=" + std::to_string(n) + " is below the class count " + std::to_string(labels.classes));
  }
  for (std::size_t c = 0; c < labels.classes; ++c) {
    if (members[c].size() < quotas[c]) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(c) + " needs " + std::to_string(quotas[c]) +
                                           " rows but has " + std::to_string(members[c].size()));
    }
  }
}

}  // namespace

ClusterModel run_clusterer(const EmbeddingMatrix& m, std::size_t k, Clusterer clusterer,
                           const ClusterParams& params, Seed seed) {
  switch (clusterer) {
    case Clusterer::KMeans: return kmeans(m, k, InitMethod::Random, params, seed);
    case Clusterer::KMeansPlusPlus: return kmeans(m, k, InitMethod::PlusPlus, params, seed);
    case Clusterer::Bisecting: return bisecting_kmeans(m, k, InitMethod::Random, params, seed);
    case Clusterer::BisectingPlusPlus: return bisecting_kmeans(m, k, InitMethod::PlusPlus, params, seed);
  }
  throw Error(Errc::InvalidParams, "unknown clusterer");
}

std::vector<std::size_t> nearest_members(const EmbeddingMatrix& m, const ClusterModel& model) {
  std::vector<std::size_t> best(model.k, m.rows());
  std::vector<double> best_d(model.k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::size_t c = model.assignment[i];
    const double d = squared_distance(m.row(i), model.centroid(c));
    if (d < best_d[c]) {
      best_d[c] = d;
      best[c] = i;
    }
  }
  return best;
}

ClusterSelection select_by_clustering_detailed(const EmbeddingMatrix& m, std::size_t n, Clusterer clusterer,
                                               const ClusterParams& params, Seed seed) {
  if (n == 0 || n > m.rows()) {
    throw Error(Errc::NExceedsPopulation,
                "n=" + std::to_string(n) + " must be in [1, " + std::to_string(m.rows()) + "]");
  }
  ClusterSelection out;
  out.model = run_clusterer(m, n, clusterer, params, seed);
  out.representatives = nearest_members(m, out.model);
  out.result.indices = out.representatives;
  std::sort(out.result.indices.begin(), out.result.indices.end());
  out.result.method = SelectionMethod::ClusterSelect;
  out.result.mode = SelectionMode::Imbalanced;
  out.result.seed = seed;
  out.result.clusterer = clusterer;
  return out;
}

SelectionResult select_by_clustering(const EmbeddingMatrix& m, std::size_t n, Clusterer clusterer,
                                     const ClusterParams& params, Seed seed) {
  return select_by_clustering_detailed(m, n, clusterer, params, seed).result;
}

std::vector<std::size_t> balanced_quotas(std::size_t n, std::size_t classes) {
  std::vector<std::size_t> q(classes, classes == 0 ? 0 : n / classes);
  for (std::size_t c = 0; c < (classes == 0 ? 0 : n % classes); ++c) ++q[c];
  return q;
}

SelectionResult select_balanced(const EmbeddingMatrix& m, const LabelAssignment& labels, std::size_t n,
                                Clusterer clusterer, const ClusterParams& params, Seed seed) {
  validate(labels);
  const auto members = rows_by_class(m, labels);
  const auto quotas = balanced_quotas(n, labels.classes);
  check_balanced_inputs(labels, n, members, quotas);

  SelectionResult out;
  out.method = SelectionMethod::ClusterSelect;
  out.mode = SelectionMode::Balanced;
  out.seed = seed;
  out.clusterer = clusterer;
  out.per_class_counts.emplace();
  for (std::size_t c = 0; c < labels.classes; ++c) {
    const EmbeddingMatrix sub = m.subset(members[c]);
    const auto picked = select_by_clustering(sub, quotas[c], clusterer, params, derive_seed(seed, c));
    for (std::size_t local : picked.indices) out.indices.push_back(members[c][local]);
    (*out.per_class_counts)[static_cast<ClassIndex>(c)] = quotas[c];
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

SelectionResult select_random(std::size_t population, std::size_t n, Seed seed) {
  if (n > population) {
    throw Error(Errc::NExceedsPopulation,
                "n=" + std::to_string(n) + " exceeds population " + std::to_string(population));
  }
  Rng rng(seed);
  SelectionResult out;
  out.indices = rng.sample_without_replacement(population, n);
  std::sort(out.indices.begin(), out.indices.end());
  out.method = SelectionMethod::Random;
  out.mode = SelectionMode::Imbalanced;
  out.seed = seed;
  return out;
}

SelectionResult select_random_balanced(const EmbeddingMatrix& m, const LabelAssignment& labels, std::size_t n,
                                       Seed seed) {
  validate(labels);
  const auto members = rows_by_class(m, labels);
  const auto quotas = balanced_quotas(n, labels.classes);
  for (std::size_t c = 0; c < labels.classes; ++c) {
    if (members[c].size() < quotas[c]) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(c) + " needs " + std::to_string(quotas[c]) +
                                           " rows but has " + std::to_string(members[c].size()));
    }
  }
  SelectionResult out;
  out.method = SelectionMethod::Random;
  out.mode = SelectionMode::Balanced;
  out.seed = seed;
  out.per_class_counts.emplace();
  for (std::size_t c = 0; c < labels.classes; ++c) {
    Rng rng(derive_seed(seed, c));
    for (std::size_t local : rng.sample_without_replacement(members[c].size(), quotas[c])) {
      out.indices.push_back(members[c][local]);
    }
    (*out.per_class_counts)[static_cast<ClassIndex>(c)] = quotas[c];
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

void attach_class_counts(SelectionResult& sel, const EmbeddingMatrix& m, const LabelAssignment& labels) {
  std::map<ClassIndex, std::size_t> counts;
  for (std::size_t c = 0; c < labels.classes; ++c) counts[static_cast<ClassIndex>(c)] = 0;
  for (std::size_t i : sel.indices) ++counts[labels.at(m.ids().at(i))];
  sel.per_class_counts = std::move(counts);
}

std::string_view to_string(Clusterer c) noexcept {
  switch (c) {
    case Clusterer::KMeans: return "kmeans";
    case Clusterer::KMeansPlusPlus: return "kmeans++";
    case Clusterer::Bisecting: return "bisecting";
    case Clusterer::BisectingPlusPlus: return "bisecting++";
  }
  return "?";
}

std::string_view to_string(SelectionMethod m) noexcept {
  return m == SelectionMethod::ClusterSelect ? "cluster-select" : "random";
}

std::string_view to_string(SelectionMode m) noexcept {
  return m == SelectionMode::Imbalanced ? "imbalanced" : "balanced";
}

Clusterer parse_clusterer(std::string_view text) {
  for (auto c : {Clusterer::KMeans, Clusterer::KMeansPlusPlus, Clusterer::Bisecting, Clusterer::BisectingPlusPlus}) {
    if (text == to_string(c)) return c;
  }
  throw Error(Errc::InvalidParams, "unknown clusterer '" + std::string(text) + "'");
}

SelectionMethod parse_selection_method(std::string_view text) {
  if (text == "cluster-select") return SelectionMethod::ClusterSelect;
  if (text == "random") return SelectionMethod::Random;
  throw Error(Errc::InvalidParams, "unknown selection method '" + std::string(text) + "'");
}

SelectionMode parse_selection_mode(std::string_view text) {
  if (text == "imbalanced") return SelectionMode::Imbalanced;
  if (text == "balanced") return SelectionMode::Balanced;
  throw Error(Errc::InvalidParams, "unknown selection mode '" + std::string(text) + "'");
}

}  // namespace labelsel
