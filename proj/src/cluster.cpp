#include "labelsel/cluster.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace labelsel {

namespace {

void check_k(const EmbeddingMatrix& m, std::size_t k) {
  if (k == 0 || k > m.rows()) {
    throw Error(Errc::KExceedsN, "k=" + std::to_string(k) + " must be in [1, " + std::to_string(m.rows()) + "]");
  }
}

std::vector<double> rows_as_centroids(const EmbeddingMatrix& m, std::span<const std::size_t> positions) {
  std::vector<double> out;
  out.reserve(positions.size() * m.dim());
  for (std::size_t p : positions) {
    for (float v : m.row(p)) out.push_back(v);
  }
  return out;
}

struct LloydState {
  std::vector<double> centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> dist;  // squared distance of each row to its assigned centroid
  std::vector<std::size_t> sizes;
};

void assign_all(const EmbeddingMatrix& m, std::size_t k, LloydState& s) {
  const std::size_t n = m.rows();
  s.assignment.resize(n);
  s.dist.resize(n);
  s.sizes.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = m.row(i);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double d = squared_distance(x, {s.centroids.data() + c * m.dim(), m.dim()});
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    s.assignment[i] = best;
    s.dist[i] = best_d;
    ++s.sizes[best];
  }
}

// An empty cluster takes the row farthest from its own centroid, among rows
// whose cluster would stay non-empty. The seized row becomes the centroid.
void repair_empty(const EmbeddingMatrix& m, std::size_t k, LloydState& s) {
  const std::size_t dim = m.dim();
  for (std::size_t c = 0; c < k; ++c) {
    if (s.sizes[c] != 0) continue;
    std::size_t far = m.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (s.sizes[s.assignment[i]] > 1 && s.dist[i] > far_d) {
        far_d = s.dist[i];
        far = i;
      }
    }
    // k <= N guarantees some cluster holds more than one row.
    --s.sizes[s.assignment[far]];
    s.assignment[far] = c;
    s.dist[far] = 0.0;
    s.sizes[c] = 1;
    auto x = m.row(far);
    std::copy(x.begin(), x.end(), s.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }
}

double total(const std::vector<double>& dist) {
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum;
}

void update_means(const EmbeddingMatrix& m, std::size_t k, LloydState& s) {
  const std::size_t dim = m.dim();
  std::vector<double> sums(k * dim, 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* dst = sums.data() + s.assignment[i] * dim;
    auto x = m.row(i);
    for (std::size_t j = 0; j < dim; ++j) dst[j] += x[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    const double inv = 1.0 / static_cast<double>(s.sizes[c]);
    for (std::size_t j = 0; j < dim; ++j) s.centroids[c * dim + j] = sums[c * dim + j] * inv;
  }
}

ClusterModel lloyd(const EmbeddingMatrix& m, std::size_t k, std::vector<double> initial,
                   const ClusterParams& params) {
  LloydState s;
  s.centroids = std::move(initial);
  ClusterModel out;
  out.k = k;
  out.dim = m.dim();
  double prev = 0.0;
  for (std::size_t iter = 0; iter < params.max_iters; ++iter) {
    assign_all(m, k, s);
    repair_empty(m, k, s);
    const double w = total(s.dist);
    out.wcss_trace.push_back(w);
    if (iter > 0) {
      if (prev <= 0.0 || (prev - w) / prev < params.rel_tol) break;
    }
    if (iter + 1 == params.max_iters) break;
    prev = w;
    update_means(m, k, s);
  }
  out.centroids = std::move(s.centroids);
  out.assignment = std::move(s.assignment);
  out.wcss = out.wcss_trace.back();
  return out;
}

std::vector<double> mean_of(const EmbeddingMatrix& m, std::span<const std::size_t> members) {
  std::vector<double> mean(m.dim(), 0.0);
  for (std::size_t i : members) {
    auto x = m.row(i);
    for (std::size_t j = 0; j < m.dim(); ++j) mean[j] += x[j];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : mean) v *= inv;
  return mean;
}

double sse_of(const EmbeddingMatrix& m, std::span<const std::size_t> members, const std::vector<double>& c) {
  double sum = 0.0;
  for (std::size_t i : members) sum += squared_distance(m.row(i), c);
  return sum;
}

}  // namespace

void validate(const ClusterParams& params) {
  if (params.max_iters < 1) throw Error(Errc::InvalidParams, "max_iters must be >= 1");
  if (params.restarts < 1) throw Error(Errc::InvalidParams, "restarts must be >= 1");
  if (!(params.rel_tol >= 0.0)) throw Error(Errc::InvalidParams, "rel_tol must be non-negative");
}

double squared_distance(std::span<const float> x, std::span<const double> c) noexcept {
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = static_cast<double>(x[j]) - c[j];
    sum += d * d;
  }
  return sum;
}

std::size_t nearest_centroid(std::span<const float> x, const std::vector<double>& centroids, std::size_t k) {
  const std::size_t dim = x.size();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    double d = squared_distance(x, {centroids.data() + c * dim, dim});
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::size_t> init_random(const EmbeddingMatrix& m, std::size_t k, Seed seed) {
  check_k(m, k);
  Rng rng(seed);
  return rng.sample_without_replacement(m.rows(), k);
}

std::vector<std::size_t> init_plusplus(const EmbeddingMatrix& m, std::size_t k, Seed seed,
                                       PlusPlusVariant variant) {
  check_k(m, k);
  Rng rng(seed);
  const std::size_t first = rng.index(m.rows());
  return init_plusplus_from(m, k, first, variant, rng);
}

std::vector<std::size_t> init_plusplus_from(const EmbeddingMatrix& m, std::size_t k, std::size_t first,
                                            PlusPlusVariant variant, Rng& rng) {
  check_k(m, k);
  const std::size_t n = m.rows();
  std::vector<std::size_t> chosen{first};
  std::vector<bool> taken(n, false);
  taken[first] = true;
  std::vector<double> min_d(n);
  {
    const auto c = rows_as_centroids(m, chosen);
    for (std::size_t i = 0; i < n; ++i) min_d[i] = squared_distance(m.row(i), c);
  }
  while (chosen.size() < k) {
    std::size_t pick = n;
    if (variant == PlusPlusVariant::GreedyFarthest) {
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && min_d[i] > best) {
          best = min_d[i];
          pick = i;
        }
      }
    } else {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) mass += min_d[i];
      }
      if (mass > 0.0) {
        const double target = rng.uniform() * mass;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (taken[i] || min_d[i] <= 0.0) continue;
          acc += min_d[i];
          pick = i;
          if (acc > target) break;
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          if (!taken[i]) {
            pick = i;
            break;
          }
        }
      }
    }
    chosen.push_back(pick);
    taken[pick] = true;
    std::vector<double> c(m.row(pick).begin(), m.row(pick).end());
    for (std::size_t i = 0; i < n; ++i) min_d[i] = std::min(min_d[i], squared_distance(m.row(i), c));
  }
  return chosen;
}

ClusterModel kmeans(const EmbeddingMatrix& m, std::size_t k, InitMethod init, const ClusterParams& params,
                    Seed seed) {
  check_k(m, k);
  validate(params);
  ClusterModel best;
  std::vector<double> restart_wcss;
  for (std::size_t r = 0; r < params.restarts; ++r) {
    const Seed run_seed = derive_seed(seed, r);
    auto seeds = init == InitMethod::Random ? init_random(m, k, run_seed)
                                            : init_plusplus(m, k, run_seed, params.plusplus_variant);
    ClusterModel run = lloyd(m, k, rows_as_centroids(m, seeds), params);
    restart_wcss.push_back(run.wcss);
    if (r == 0 || run.wcss < best.wcss) best = std::move(run);
  }
  best.restart_wcss = std::move(restart_wcss);
  return best;
}

ClusterModel bisecting_kmeans(const EmbeddingMatrix& m, std::size_t k, InitMethod init,
                              const ClusterParams& params, Seed seed) {
  check_k(m, k);
  validate(params);

  struct Leaf {
    std::vector<std::size_t> members;
    double sse;
  };
  std::vector<Leaf> leaves;
  {
    Leaf root;
    root.members.resize(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) root.members[i] = i;
    root.sse = sse_of(m, root.members, mean_of(m, root.members));
    leaves.push_back(std::move(root));
  }

  std::uint64_t split = 0;
  while (leaves.size() < k) {
    std::size_t target = leaves.size();
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      if (leaves[l].members.size() < 2) continue;
      if (target == leaves.size() || leaves[l].sse > leaves[target].sse) target = l;
    }
    if (target == leaves.size()) {
      throw Error(Errc::UnsplittableCluster,
                  "no cluster with two or more points left to split at " + std::to_string(leaves.size()) +
                      " of " + std::to_string(k) + " clusters");
    }
    Leaf parent = std::move(leaves[target]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(target));

    const EmbeddingMatrix sub = m.subset(parent.members);
    const ClusterModel halves = kmeans(sub, 2, init, params, derive_seed(seed, split++));
    Leaf children[2];
    for (std::size_t i = 0; i < parent.members.size(); ++i) {
      children[halves.assignment[i]].members.push_back(parent.members[i]);
    }
    for (Leaf& child : children) {
      child.sse = sse_of(m, child.members, mean_of(m, child.members));
      leaves.push_back(std::move(child));
    }
  }

  LloydState s;
  for (const Leaf& leaf : leaves) {
    auto mean = mean_of(m, leaf.members);
    s.centroids.insert(s.centroids.end(), mean.begin(), mean.end());
  }
  assign_all(m, k, s);
  repair_empty(m, k, s);

  ClusterModel out;
  out.k = k;
  out.dim = m.dim();
  out.centroids = std::move(s.centroids);
  out.assignment = std::move(s.assignment);
  out.wcss = total(s.dist);
  return out;
}

double wcss(const EmbeddingMatrix& m, const ClusterModel& model) {
  if (model.dim != m.dim() || model.assignment.size() != m.rows() ||
      model.centroids.size() != model.k * model.dim) {
    throw Error(Errc::DimensionMismatch, "cluster model does not match the embedding matrix shape");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const std::size_t c = model.assignment[i];
    if (c >= model.k) throw Error(Errc::DimensionMismatch, "assignment index out of range");
    sum += squared_distance(m.row(i), model.centroid(c));
  }
  return sum;
}

std::string_view to_string(PlusPlusVariant v) noexcept {
  return v == PlusPlusVariant::GreedyFarthest ? "greedy-farthest" : "d2-sampling";
}

PlusPlusVariant parse_plusplus_variant(std::string_view text) {
  if (text == "greedy-farthest") return PlusPlusVariant::GreedyFarthest;
  if (text == "d2-sampling") return PlusPlusVariant::D2Sampling;
  throw Error(Errc::InvalidParams, "unknown ++ variant '" + std::string(text) + "'");
}

}  // namespace labelsel
