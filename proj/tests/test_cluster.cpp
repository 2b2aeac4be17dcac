#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "labelsel/cluster.hpp"
#include "labelsel/sslsim.hpp"
#include "support/oracles.hpp"

using namespace labelsel;

namespace {

EmbeddingMatrix from_points(const oracle::Points& pts) {
  std::vector<float> data;
  for (const auto& p : pts) data.insert(data.end(), p.begin(), p.end());
  return EmbeddingMatrix::with_contiguous_ids(pts.size(), pts[0].size(), std::move(data));
}

oracle::Points to_points(const EmbeddingMatrix& m) {
  oracle::Points pts;
  for (std::size_t i = 0; i < m.rows(); ++i) pts.emplace_back(m.row(i).begin(), m.row(i).end());
  return pts;
}

oracle::Points random_points(std::size_t n, std::size_t dim, std::mt19937_64& gen) {
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  oracle::Points pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& v : p) v = u(gen);  // float-representable
  }
  return pts;
}

void check_nearest_assignment(const EmbeddingMatrix& m, const ClusterModel& model) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.k; ++c) {
      std::vector<double> cen(model.centroid(c).begin(), model.centroid(c).end());
      std::vector<double> x(m.row(i).begin(), m.row(i).end());
      double d = oracle::sq_dist(x, cen);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(model.assignment[i] == best);
  }
}

void check_no_empty(const ClusterModel& model) {
  std::set<std::size_t> used(model.assignment.begin(), model.assignment.end());
  CHECK(used.size() == model.k);
}

Dataset four_blobs(Seed seed, std::size_t per_class = 10) {
  BlobSpec spec;
  spec.classes = 4;
  spec.dim = 2;
  spec.per_class = per_class;
  spec.spread = 1.0;
  spec.separation = 10.0;
  spec.seed = seed;
  return gen_blobs(spec);
}

}  // namespace

TEST_CASE("init_random draws distinct rows deterministically") {
  std::mt19937_64 gen(1);
  auto m = from_points(random_points(8, 2, gen));
  auto all = init_random(m, 8, 5);
  std::set<std::size_t> distinct(all.begin(), all.end());
  CHECK(distinct.size() == 8);
  CHECK(init_random(m, 3, 11) == init_random(m, 3, 11));
  CHECK(init_random(m, 1, 2).size() == 1);
  CHECK_THROWS_AS(init_random(m, 9, 0), Error);
}

TEST_CASE("greedy ++ worked example") {
  // 1-D points {1, 10, 0}: from index 0 the farthest is 10, then 0 (min-distance 1).
  auto m = from_points({{1.0}, {10.0}, {0.0}});
  Rng rng(0);
  auto order = init_plusplus_from(m, 3, 0, PlusPlusVariant::GreedyFarthest, rng);
  CHECK(order == std::vector<std::size_t>{0, 1, 2});
  CHECK(oracle::greedy_farthest(to_points(m), 3, 0) == order);
}

TEST_CASE("greedy ++ on duplicates picks the lowest unchosen index") {
  auto m = from_points({{2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}});
  Rng rng(0);
  CHECK(init_plusplus_from(m, 2, 2, PlusPlusVariant::GreedyFarthest, rng) == std::vector<std::size_t>{2, 0});
  CHECK(init_plusplus_from(m, 2, 0, PlusPlusVariant::D2Sampling, rng) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("k=1 ++ seeding is variant independent") {
  std::mt19937_64 gen(3);
  auto m = from_points(random_points(10, 3, gen));
  CHECK(init_plusplus(m, 1, 9, PlusPlusVariant::GreedyFarthest) ==
        init_plusplus(m, 1, 9, PlusPlusVariant::D2Sampling));
}

TEST_CASE("greedy ++ matches brute force on random sets") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + gen() % 20;
    const std::size_t dim = 1 + gen() % 4;
    auto pts = random_points(n, dim, gen);
    auto m = from_points(pts);
    const std::size_t k = 1 + gen() % n;
    auto got = init_plusplus(m, k, gen(), PlusPlusVariant::GreedyFarthest);
    CHECK(got == oracle::greedy_farthest(pts, k, got.front()));
  }
}

TEST_CASE("d2 sampling never repeats a row while distinct rows remain") {
  std::mt19937_64 gen(5);
  auto m = from_points(random_points(15, 2, gen));
  for (Seed s = 0; s < 20; ++s) {
    auto got = init_plusplus(m, 15, s, PlusPlusVariant::D2Sampling);
    CHECK(std::set<std::size_t>(got.begin(), got.end()).size() == 15);
  }
}

TEST_CASE("kmeans saturation and mean identity") {
  std::mt19937_64 gen(4);
  auto pts = random_points(7, 2, gen);
  auto m = from_points(pts);

  auto full = kmeans(m, 7, InitMethod::PlusPlus, ClusterParams{}, 1);
  CHECK(full.wcss == 0.0);
  check_no_empty(full);

  auto one = kmeans(m, 1, InitMethod::Random, ClusterParams{}, 1);
  std::vector<double> mean(2, 0.0);
  for (auto& p : pts) {
    mean[0] += p[0] / 7;
    mean[1] += p[1] / 7;
  }
  double total = 0.0;
  for (auto& p : pts) total += oracle::sq_dist(p, mean);
  CHECK(one.centroids[0] == doctest::Approx(mean[0]).epsilon(1e-12));
  CHECK(one.centroids[1] == doctest::Approx(mean[1]).epsilon(1e-12));
  CHECK(one.wcss == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("kmeans two-cluster example matches brute-force partition") {
  oracle::Points pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  auto best = oracle::best_two_partition(pts);
  CHECK(best.wcss == doctest::Approx(1.0));
  auto m = from_points(pts);
  for (auto init : {InitMethod::Random, InitMethod::PlusPlus}) {
    auto model = kmeans(m, 2, init, ClusterParams{}, 3);
    CHECK(model.wcss == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(oracle::adjusted_rand_index(model.assignment, best.labels) == 1.0);
    std::set<std::pair<double, double>> cents{{model.centroids[0], model.centroids[1]},
                                              {model.centroids[2], model.centroids[3]}};
    CHECK(cents == std::set<std::pair<double, double>>{{0.0, 0.5}, {10.0, 0.5}});
  }
}

TEST_CASE("kmeans invariants on random data") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 5 + gen() % 40;
    auto m = from_points(random_points(n, 1 + gen() % 4, gen));
    const std::size_t k = 1 + gen() % std::min<std::size_t>(n, 8);
    ClusterParams params;
    params.restarts = 3;
    auto model = kmeans(m, k, trial % 2 ? InitMethod::PlusPlus : InitMethod::Random, params, gen());
    check_no_empty(model);
    check_nearest_assignment(m, model);
    CHECK(wcss(m, model) == doctest::Approx(model.wcss).epsilon(1e-9));
    for (std::size_t t = 1; t < model.wcss_trace.size(); ++t) {
      CHECK(model.wcss_trace[t] <= model.wcss_trace[t - 1] * (1 + 1e-9));
    }
    REQUIRE(model.restart_wcss.size() == 3);
    for (double w : model.restart_wcss) CHECK(model.wcss <= w);
  }
}

TEST_CASE("kmeans is deterministic") {
  std::mt19937_64 gen(8);
  auto m = from_points(random_points(50, 3, gen));
  CHECK(kmeans(m, 5, InitMethod::PlusPlus, ClusterParams{}, 77) ==
        kmeans(m, 5, InitMethod::PlusPlus, ClusterParams{}, 77));
  CHECK(bisecting_kmeans(m, 5, InitMethod::Random, ClusterParams{}, 77) ==
        bisecting_kmeans(m, 5, InitMethod::Random, ClusterParams{}, 77));
}

TEST_CASE("empty clusters are repaired on duplicate-heavy data") {
  auto m = from_points({{0, 0}, {0, 0}, {0, 0}, {1, 1}});
  for (Seed s = 0; s < 10; ++s) {
    auto model = kmeans(m, 3, InitMethod::Random, ClusterParams{}, s);
    check_no_empty(model);
    CHECK(model.wcss == 0.0);
  }
}

TEST_CASE("bisecting k=1 equals kmeans k=1 and k=2 is one split") {
  std::mt19937_64 gen(12);
  auto m = from_points(random_points(20, 2, gen));
  auto b1 = bisecting_kmeans(m, 1, InitMethod::Random, ClusterParams{}, 4);
  auto k1 = kmeans(m, 1, InitMethod::Random, ClusterParams{}, 4);
  CHECK(b1.centroids == k1.centroids);
  CHECK(b1.assignment == k1.assignment);
  CHECK(b1.wcss == doctest::Approx(k1.wcss).epsilon(1e-12));

  auto blobs = four_blobs(2);
  auto sub = blobs.x;
  auto b2 = bisecting_kmeans(sub, 2, InitMethod::PlusPlus, ClusterParams{}, 4);
  auto k2 = kmeans(sub, 2, InitMethod::PlusPlus, ClusterParams{}, derive_seed(4, 0));
  CHECK(oracle::adjusted_rand_index(b2.assignment, k2.assignment) == 1.0);
}

TEST_CASE("bisecting recovers four separated blobs") {
  for (Seed s = 0; s < 5; ++s) {
    auto data = four_blobs(s);
    auto truth = data.y.for_rows(data.x);
    std::vector<std::size_t> t(truth.begin(), truth.end());
    for (auto init : {InitMethod::Random, InitMethod::PlusPlus}) {
      auto model = bisecting_kmeans(data.x, 4, init, ClusterParams{}, s);
      CHECK(oracle::adjusted_rand_index(model.assignment, t) == 1.0);
      check_no_empty(model);
      check_nearest_assignment(data.x, model);
      CHECK(wcss(data.x, model) == doctest::Approx(model.wcss).epsilon(1e-9));
    }
  }
}

TEST_CASE("bisecting reports unsplittable clusters") {
  // Distinct points always split; with k == N every leaf becomes a singleton.
  auto m = from_points({{0.0}, {1.0}, {5.0}});
  auto model = bisecting_kmeans(m, 3, InitMethod::Random, ClusterParams{}, 0);
  check_no_empty(model);
  CHECK(model.wcss == 0.0);
  CHECK_THROWS_AS(bisecting_kmeans(m, 4, InitMethod::Random, ClusterParams{}, 0), Error);
}

TEST_CASE("wcss edge cases") {
  auto m = from_points({{0, 0}, {2, 0}});
  ClusterModel model;
  model.k = 1;
  model.dim = 2;
  model.centroids = {0, 0};
  model.assignment = {0, 0};
  CHECK(wcss(m, model) == 4.0);
  model.centroids = {0, 0, 2, 0};
  model.k = 2;
  model.assignment = {0, 1};
  CHECK(wcss(m, model) == 0.0);
  model.dim = 3;
  CHECK_THROWS_AS(wcss(m, model), Error);
}

TEST_CASE("assignment partition is invariant under isometries and scaling") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto data = four_blobs(100 + trial, 15);
    const auto& x = data.x;
    const double angle = 0.3 + trial;
    const double scale = 2.0;  // power of two: float scaling is exact
    std::vector<float> moved;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double a = x.at(i, 0), b = x.at(i, 1);
      moved.push_back(static_cast<float>(scale * (std::cos(angle) * a - std::sin(angle) * b) + 3.0));
      moved.push_back(static_cast<float>(scale * (std::sin(angle) * a + std::cos(angle) * b) - 7.0));
    }
    auto y = EmbeddingMatrix::with_contiguous_ids(x.rows(), 2, moved);
    for (auto init : {InitMethod::Random, InitMethod::PlusPlus}) {
      auto a = kmeans(x, 4, init, ClusterParams{}, trial);
      auto b = kmeans(y, 4, init, ClusterParams{}, trial);
      CHECK(a.assignment == b.assignment);
      auto c = bisecting_kmeans(x, 4, init, ClusterParams{}, trial);
      auto d = bisecting_kmeans(y, 4, init, ClusterParams{}, trial);
      CHECK(c.assignment == d.assignment);
    }
  }
}

TEST_CASE("cluster params validation") {
  ClusterParams p;
  p.restarts = 0;
  CHECK_THROWS_AS(validate(p), Error);
  p.restarts = 1;
  p.max_iters = 0;
  CHECK_THROWS_AS(validate(p), Error);
}
