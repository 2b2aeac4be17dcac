// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "labelsel/bench.hpp"
#include "labelsel/cluster.hpp"
#include "labelsel/curriculum.hpp"
#include "labelsel/ingest.hpp"
#include "labelsel/policy.hpp"
#include "labelsel/select.hpp"
#include "labelsel/sslsim.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/pipeline.hpp"

using namespace labelsel;

namespace {

// Pinned tolerances and thresholds.
constexpr double kWcssRelTol = 1e-9;
constexpr double kClusterSeconds = 5.0;
constexpr int kRecoverySeedsRequired = 9;
constexpr double kEntropyTol = 1e-9;
constexpr double kGradRelTol = 1e-4;
constexpr int kGradPointsPerMode = 10;
constexpr double kHeadlineWinRate = 0.70;
constexpr double kHeadlineSeconds = 120.0;
constexpr double kPolicyMaxGapPp = 2.0;
constexpr std::size_t kPairedSeeds = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

EmbeddingMatrix float_matrix(std::size_t n, std::size_t dim, std::mt19937_64& gen, oracle::Points* pts) {
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  std::vector<float> data(n * dim);
  for (auto& v : data) v = u(gen);
  if (pts) {
    pts->assign(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) (*pts)[i][j] = data[i * dim + j];
    }
  }
  return EmbeddingMatrix::with_contiguous_ids(n, dim, std::move(data));
}

std::vector<std::size_t> truth_of(const Dataset& d) {
  std::vector<std::size_t> out;
  for (auto id : d.x.ids()) out.push_back(d.y.at(id));
  return out;
}

bool trace_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1] * (1.0 + kWcssRelTol)) return false;
  }
  return true;
}

Outcome clustering_recovery() {
  const auto t0 = Clock::now();
  int kmeans_hits = 0, bisect_hits = 0;
  bool monotone = true;
  ClusterParams params;
  params.restarts = 10;
  for (Seed s = 0; s < 10; ++s) {
    BlobSpec spec;
    spec.classes = 4;
    spec.dim = 2;
    spec.per_class = 50;
    spec.spread = 1.0;
    spec.separation = 10.0;
    spec.seed = s;
    const auto d = gen_blobs(spec);
    const auto truth = truth_of(d);
    const auto km = kmeans(d.x, 4, InitMethod::Random, params, s);
    const auto bk = bisecting_kmeans(d.x, 4, InitMethod::Random, params, s);
    if (oracle::adjusted_rand_index(km.assignment, truth) == 1.0) ++kmeans_hits;
    if (oracle::adjusted_rand_index(bk.assignment, truth) == 1.0) ++bisect_hits;
    monotone = monotone && trace_monotone(km.wcss_trace);

    // Every restart's own trace, not just the winner's.
    for (std::size_t r = 0; r < params.restarts; ++r) {
      ClusterParams one = params;
      one.restarts = 1;
      monotone = monotone && trace_monotone(kmeans(d.x, 4, InitMethod::Random, one, derive_seed(s, r)).wcss_trace);
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << "kmeans ARI=1 on " << kmeans_hits << "/10, bisecting on " << bisect_hits << "/10, wcss monotone "
     << (monotone ? "yes" : "no") << ", " << fmt("%.2f", secs) << "s";
  return {kmeans_hits >= kRecoverySeedsRequired && bisect_hits >= kRecoverySeedsRequired && monotone &&
              secs < kClusterSeconds,
          os.str()};
}

Outcome greedy_oracle() {
  std::mt19937_64 gen(2);
  int ok = 0;
  for (int t = 0; t < 30; ++t) {
    oracle::Points pts;
    const std::size_t n = 2 + gen() % 40;
    const auto m = float_matrix(n, 1 + gen() % 4, gen, &pts);
    const std::size_t k = 1 + gen() % n;
    const auto got = init_plusplus(m, k, gen(), PlusPlusVariant::GreedyFarthest);
    if (got == oracle::greedy_farthest(pts, k, got.front())) ++ok;
  }
  return {ok == 30, std::to_string(ok) + "/30 seedings match brute force"};
}

Outcome selection_oracle() {
  std::mt19937_64 gen(3);
  const Clusterer all[] = {Clusterer::KMeans, Clusterer::KMeansPlusPlus, Clusterer::Bisecting,
                           Clusterer::BisectingPlusPlus};
  int ok = 0;
  for (int t = 0; t < 50; ++t) {
    oracle::Points pts;
    const std::size_t rows = 5 + gen() % 60;
    const auto m = float_matrix(rows, 1 + gen() % 5, gen, &pts);
    const std::size_t n = 1 + gen() % rows;
    ClusterParams params;
    params.restarts = 3;
    const auto out = select_by_clustering_detailed(m, n, all[t % 4], params, gen());
    bool good = out.result.indices.size() == n &&
                std::set<std::size_t>(out.result.indices.begin(), out.result.indices.end()).size() == n;
    for (std::size_t c = 0; c < n && good; ++c) {
      const auto cen = out.model.centroid(c);
      const std::vector<double> centre(cen.begin(), cen.end());
      std::size_t best = rows;
      for (std::size_t i = 0; i < rows; ++i) {
        if (out.model.assignment[i] != c) continue;
        if (best == rows || oracle::sq_dist(pts[i], centre) < oracle::sq_dist(pts[best], centre)) best = i;
      }
      good = out.representatives[c] == best;
    }
    const std::size_t classes = 1 + gen() % 10;
    const auto q = balanced_quotas(n, classes);
    std::size_t sum = 0;
    for (auto v : q) sum += v;
    good = good && sum == n && *std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end()) <= 1;
    if (good) ++ok;
  }
  return {ok == 50, std::to_string(ok) + "/50 instances verified"};
}

Outcome schedule_laws() {
  std::mt19937_64 gen(4);
  int ok = 0;
  for (int t = 0; t < 1000; ++t) {
    PolicySpec s;
    s.kind = static_cast<PolicyKind>(gen() % 5);
    s.epochs = gen() % 150;
    s.n = gen() % 500;
    s.n0 = gen() % (s.n + 1);
    s.e0 = gen() % (s.epochs + 1);
    s.ef = s.e0 + gen() % (s.epochs - s.e0 + 1);
    s.m = 1 + gen() % 25;
    if (s.kind == PolicyKind::Naive) s.n0 = s.n;
    if (s.kind == PolicyKind::LateJump) s.ef = s.e0;
    const auto c = build_schedule(s).counts;
    bool good = c.size() == s.epochs;
    for (std::size_t e = 0; e < c.size() && good; ++e) {
      good = (e == 0 || c[e] >= c[e - 1]) && c[e] >= s.n0 && c[e] <= s.n;
      if (s.kind != PolicyKind::Naive && e < s.e0) good = good && c[e] == s.n0;
      if (e >= s.ef) good = good && c[e] == s.n;
      if (s.kind == PolicyKind::Step && c[e] != s.n) good = good && (c[e] - s.n0) % s.m == 0;
    }
    if (good) ++ok;
  }
  const auto worked = build_schedule(PolicySpec{PolicyKind::Linear, 100, 10, 100, 0, 90, 1}).counts;
  const bool example = worked[45] == 55;
  return {ok == 1000 && example,
          std::to_string(ok) + "/1000 random specs lawful, worked example counts[45]=" + std::to_string(worked[45])};
}

Outcome entropy_values() {
  const double uniform = entropy(std::vector<double>(10, 0.1));
  const double onehot = entropy(std::vector<double>{0.0, 1.0, 0.0});
  std::mt19937_64 gen(5);
  std::gamma_distribution<double> g(0.4, 1.0);
  int ok = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 2 + gen() % 40, classes = 2 + gen() % 10;
    std::vector<SampleId> ids(rows);
    std::vector<double> probs;
    for (std::size_t i = 0; i < rows; ++i) {
      ids[i] = i;
      std::vector<double> r(classes);
      double s = 0;
      for (auto& v : r) s += (v = g(gen) + 1e-12);
      for (auto& v : r) probs.push_back(v / s);
    }
    PredictionMatrix preds(ids, classes, probs);
    SelectionResult sel;
    for (std::size_t i = 0; i < rows; ++i) {
      if (gen() % 3) sel.indices.push_back(i);
    }
    const auto ord = curriculum_order(preds, sel);
    bool good = ord.order.size() == sel.indices.size();
    for (std::size_t k = 1; k < ord.order.size() && good; ++k) {
      const auto a = preds.row(ord.order[k - 1]), b = preds.row(ord.order[k]);
      good = oracle::entropy_direct({a.begin(), a.end()}) <= oracle::entropy_direct({b.begin(), b.end()}) + 1e-12;
    }
    if (good) ++ok;
  }
  const bool pass = std::abs(uniform - std::log(10.0)) <= kEntropyTol &&
                    std::abs(uniform - 2.302585) < 1e-6 && onehot == 0.0 && ok == 100;
  return {pass, "H(uniform10)=" + fmt("%.9f", uniform) + ", H(one-hot)=" + fmt("%g", onehot) + ", " +
                    std::to_string(ok) + "/100 orderings non-decreasing"};
}

Outcome gradient_checks() {
  std::mt19937_64 gen(6);
  double worst = 0.0;
  int checked = 0;
  for (auto mode : {UnsupMode::FixMatch, UnsupMode::PiModel, UnsupMode::MeanTeacher, UnsupMode::None}) {
    for (int t = 0; t < kGradPointsPerMode; ++t) {
      SimConfig cfg;
      cfg.unsup_mode = mode;
      cfg.tau = 0.6;
      cfg.alpha = 1.0 + t % 2;
      auto prob = gradcheck::random_problem(gen, 2 + t % 5, 1 + t % 6, 1 + t % 7, 3 + t % 5, cfg);
      worst = std::max(worst, gradcheck::max_fd_error(prob, cfg));
      ++checked;
    }
  }
  return {worst < kGradRelTol,
          std::to_string(checked) + " points over 4 modes, worst relative error " + fmt("%.2e", worst)};
}

BenchConfig desk_config(std::vector<std::size_t> budgets, std::vector<BenchPolicy> policies) {
  BenchConfig cfg;
  cfg.blob_spec.classes = 8;
  cfg.blob_spec.dim = 16;
  cfg.blob_spec.per_class = 250;
  cfg.blob_spec.spread = 1.0;
  cfg.blob_spec.separation = 4.0;
  cfg.test_per_class = 200;
  cfg.budgets = std::move(budgets);
  cfg.methods = {BenchMethod{"random", SelectionMethod::Random},
                 BenchMethod{"cluster-select", SelectionMethod::ClusterSelect, SelectionMode::Imbalanced,
                             Clusterer::KMeansPlusPlus}};
  cfg.policies = std::move(policies);
  cfg.sim.tau = 0.95;
  cfg.sim.alpha = 1.0;
  cfg.sim.unsup_mode = UnsupMode::FixMatch;
  cfg.seeds = kPairedSeeds;
  cfg.base_seed = 0;
  return cfg;
}

const ComparisonCell& cell(const ComparisonReport& r, const std::string& method, std::size_t budget,
                           const std::string& policy) {
  for (const auto& c : r.cells) {
    if (c.method == method && c.budget == budget && c.policy == policy) return c;
  }
  throw std::runtime_error("missing cell");
}

// Per-seed LS - RS differences at one budget.
std::vector<double> paired_gaps(const ComparisonReport& r, std::size_t budget) {
  const auto& ls = cell(r, "cluster-select", budget, "naive");
  const auto& rs = cell(r, "random", budget, "naive");
  std::vector<double> out;
  for (std::size_t s = 0; s < ls.per_seed.size(); ++s) out.push_back(ls.per_seed[s] - rs.per_seed[s]);
  return out;
}

ComparisonReport headline_report;
double headline_seconds = 0.0;

Outcome headline() {
  const auto t0 = Clock::now();
  headline_report = run_comparison(desk_config({8}, {BenchPolicy{"naive"}}));
  headline_seconds = seconds_since(t0);
  const auto& ls = cell(headline_report, "cluster-select", 8, "naive");
  const auto& rs = cell(headline_report, "random", 8, "naive");
  std::size_t wins = 0;
  for (std::size_t s = 0; s < ls.per_seed.size(); ++s) wins += ls.per_seed[s] > rs.per_seed[s];
  const double rate = static_cast<double>(wins) / static_cast<double>(ls.per_seed.size());
  const double gap = ls.mean - rs.mean;
  return {gap > 0 && rate >= kHeadlineWinRate && headline_seconds < kHeadlineSeconds,
          "LS " + fmt("%.2f", 100 * ls.mean) + "% vs RS " + fmt("%.2f", 100 * rs.mean) + "%, gap " +
              fmt("%+.2f", 100 * gap) + " pp, LS wins " + std::to_string(wins) + "/" +
              std::to_string(ls.per_seed.size()) + ", " + fmt("%.1f", headline_seconds) + "s"};
}

ComparisonReport trend_report;

Outcome budget_trend() {
  trend_report = run_comparison(desk_config({32, 200}, {BenchPolicy{"naive"}}));
  std::vector<std::vector<double>> gaps = {paired_gaps(headline_report, 8), paired_gaps(trend_report, 32),
                                           paired_gaps(trend_report, 200)};
  std::vector<double> mean, sd;
  for (const auto& g : gaps) {
    mean.push_back(sample_mean(g));
    sd.push_back(sample_std(g));
  }
  int inversions = 0;
  bool within = true;
  for (std::size_t i = 1; i < mean.size(); ++i) {
    if (mean[i] > mean[i - 1]) {
      ++inversions;
      within = within && mean[i] - mean[i - 1] <= sd[i];
    }
  }
  std::string detail = "mean LS-RS gap at 8/32/200:";
  for (double m : mean) detail += " " + fmt("%+.2f", 100 * m);
  detail += " pp, inversions " + std::to_string(inversions);
  return {inversions == 0 || (inversions == 1 && within), detail};
}

Outcome policy_null() {
  const auto policies = std::vector<BenchPolicy>{
      BenchPolicy{"linear-c", PolicyKind::Linear, 0.25, 0, 30, 1, Ranking::Random},
      BenchPolicy{"linear-c-curriculum", PolicyKind::Linear, 0.25, 0, 30, 1, Ranking::EntropyCurriculum}};
  const auto r = run_comparison(desk_config({32}, policies));
  bool pass = true;
  std::string detail = "Δ vs naive (pp):";
  for (const char* method : {"cluster-select", "random"}) {
    const double naive = cell(trend_report, method, 32, "naive").mean;
    for (const auto& p : policies) {
      const double d = 100 * (cell(r, method, 32, p.name).mean - naive);
      pass = pass && std::abs(d) < kPolicyMaxGapPp;
      detail += std::string(" ") + method + "/" + p.name + " " + fmt("%+.2f", d);
    }
  }
  return {pass, detail};
}

Outcome format_conformance() {
  std::mt19937_64 gen(10);
  const auto dir = oracle::scratch_dir("acceptance_emb1");
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 1 + gen() % 50, dim = 1 + gen() % 20;
    std::vector<float> data(rows * dim);
    for (auto& v : data) {
      std::uint32_t bits;
      do {
        bits = static_cast<std::uint32_t>(gen());
        std::memcpy(&v, &bits, 4);
      } while (!std::isfinite(v));
    }
    const auto m = EmbeddingMatrix::with_contiguous_ids(rows, dim, data);
    write_embeddings_bin(m, dir / "m.emb");
    const auto back = read_embeddings_bin(dir / "m.emb");
    if (back == m && std::memcmp(back.data().data(), data.data(), data.size() * 4) == 0) ++exact;
  }
  const auto root = oracle::scratch_dir("acceptance_cli");
  const auto a = pipeline::run_example(root / "a");
  const auto b = pipeline::run_example(root / "b");
  bool same = a.exit_code == 0 && b.exit_code == 0;
  for (const auto& f : pipeline::outputs) same = same && pipeline::slurp(root / "a" / f) == pipeline::slurp(root / "b" / f);
  return {exact == 100 && same, std::to_string(exact) + "/100 EMB1 round trips bit-exact, pipeline outputs " +
                                    (same ? "byte-identical" : "differ: " + a.output + b.output)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"clustering recovery", clustering_recovery},
      {"greedy ++ seeding oracle", greedy_oracle},
      {"selection oracle", selection_oracle},
      {"schedule laws", schedule_laws},
      {"entropy values", entropy_values},
      {"gradient checks", gradient_checks},
      {"headline low-budget gain", headline},
      {"budget trend", budget_trend},
      {"policy null result", policy_null},
      {"format conformance", format_conformance},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
