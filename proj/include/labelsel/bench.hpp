#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "labelsel/cluster.hpp"
#include "labelsel/curriculum.hpp"
#include "labelsel/json_io.hpp"
#include "labelsel/policy.hpp"
#include "labelsel/select.hpp"
#include "labelsel/sslsim.hpp"

namespace labelsel {

struct BenchMethod {
  std::string name;
  SelectionMethod selection = SelectionMethod::Random;
  SelectionMode mode = SelectionMode::Imbalanced;
  Clusterer clusterer = Clusterer::KMeansPlusPlus;
};

/// A policy relative to the budget: n = budget, n0 = floor(n0_fraction * n).
/// Epoch bounds are absolute; ef = 0 with a ramp kind means "the last epoch".
struct BenchPolicy {
  std::string name;
  PolicyKind kind = PolicyKind::Naive;
  double n0_fraction = 0.0;
  std::size_t e0 = 0;
  std::size_t ef = 0;
  std::size_t m = 1;
  Ranking ranking = Ranking::Random;
};

struct BenchConfig {
  BlobSpec blob_spec;
  std::size_t test_per_class = 200;
  std::vector<std::size_t> budgets;
  std::vector<BenchMethod> methods;
  std::vector<BenchPolicy> policies;
  SimConfig sim;
  ClusterParams cluster;
  std::size_t seeds = 3;
  Seed base_seed = 0;
  /// Method the paired deltas and win rates compare against; defaults to the
  /// first random-selection method.
  std::optional<std::string> baseline;
  double proxy_temperature = 1.0;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

void validate(const BenchConfig& cfg);
BenchConfig bench_config_from_json(const Json& j);
Json to_json(const BenchConfig& cfg);

/// Concrete schedule spec of `policy` at budget `n` for `epochs` epochs.
PolicySpec resolve_policy(const BenchPolicy& policy, std::size_t n, std::size_t epochs);

struct ComparisonCell {
  std::string method;
  std::size_t budget = 0;
  std::string policy;
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation; 0 for a single seed
  std::optional<double> delta_vs_random;  // mean of per-seed paired differences
  std::optional<double> win_rate;         // fraction of seeds with accuracy >= baseline
  std::vector<std::uint64_t> data_hashes;  // per seed, train+test content hash
};

struct ComparisonReport {
  std::string baseline;  // empty when no baseline method exists
  std::vector<Seed> seed_values;
  std::vector<ComparisonCell> cells;
};

ComparisonReport run_comparison(const BenchConfig& cfg);

double sample_mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

/// 64-bit FNV-1a over the EMB1 encoding of x followed by the labels.
std::uint64_t data_hash(const Dataset& d);

struct Summary {
  std::string csv;
  std::string table;
};

/// CSV `method,budget,policy,mean,std,delta_vs_random,win_rate` at full
/// precision, and an aligned table with accuracies in percent to 2 decimals.
Summary summarize(const ComparisonReport& report);

/// Accuracy-vs-budget series: `method,policy,budget,mean,std`.
std::string plot_data_csv(const ComparisonReport& report);

Json to_json(const ComparisonReport& report);

}  // namespace labelsel
