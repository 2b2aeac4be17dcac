#include "labelsel/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace labelsel {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string full(double v) { return fmt("%.17g", v); }

struct SeedOutcome {
  std::uint64_t hash = 0;
  // accuracy[method][budget][policy]
  std::vector<double> accuracy;
  std::string error;
};

std::size_t flat(const BenchConfig& cfg, std::size_t mi, std::size_t bi, std::size_t pi) {
  return (mi * cfg.budgets.size() + bi) * cfg.policies.size() + pi;
}

SeedOutcome run_seed(const BenchConfig& cfg, Seed seed_value) {
  SeedOutcome out;
  out.accuracy.assign(cfg.methods.size() * cfg.budgets.size() * cfg.policies.size(), 0.0);

  BlobSpec spec = cfg.blob_spec;
  spec.seed = derive_seed(seed_value, 1);
  const Dataset pool = gen_blobs(spec);
  const Dataset test = gen_blobs_test(spec, cfg.test_per_class);
  out.hash = data_hash(pool) ^ (data_hash(test) * 0x9E3779B97F4A7C15ULL);

  SimConfig sim = cfg.sim;
  sim.seed = derive_seed(seed_value, 2);

  std::optional<PredictionMatrix> proxy;
  const bool need_proxy = std::any_of(cfg.policies.begin(), cfg.policies.end(),
                                      [](const BenchPolicy& p) { return p.ranking == Ranking::EntropyCurriculum; });
  if (need_proxy) {
    proxy = proxy_predictions(pool.x, cfg.blob_spec.classes, cfg.proxy_temperature, derive_seed(seed_value, 3));
  }

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const BenchMethod& method = cfg.methods[mi];
    for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
      const std::size_t n = cfg.budgets[bi];
      // Shared across methods so a method listed twice reproduces its cells.
      const Seed select_seed = derive_seed(seed_value, 1000 + n);
      SelectionResult sel;
      try {
        if (method.selection == SelectionMethod::Random) {
          sel = method.mode == SelectionMode::Balanced ? select_random_balanced(pool.x, pool.y, n, select_seed)
                                                       : select_random(pool.x.rows(), n, select_seed);
        } else {
          sel = method.mode == SelectionMode::Balanced
                    ? select_balanced(pool.x, pool.y, n, method.clusterer, cfg.cluster, select_seed)
                    : select_by_clustering(pool.x, n, method.clusterer, cfg.cluster, select_seed);
        }
      } catch (const Error& e) {
        throw Error(e.code(), "method '" + method.name + "', budget " + std::to_string(n) + ": " + e.what());
      }
      for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
        const BenchPolicy& policy = cfg.policies[pi];
        const OrderedSelection ord = policy.ranking == Ranking::EntropyCurriculum
                                         ? curriculum_order(*proxy, sel)
                                         : random_order(sel, derive_seed(seed_value, 4));
        const SupervisionSchedule sched = build_schedule(resolve_policy(policy, n, sim.epochs));
        out.accuracy[flat(cfg, mi, bi, pi)] = train(pool, test, ord, sched, sim).test_accuracy;
      }
    }
  }
  return out;
}

std::uint64_t fnv1a(std::uint64_t h, const std::uint8_t* data, std::size_t size) {
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

void validate(const BenchConfig& cfg) {
  auto fail = [](const std::string& why) { throw Error(Errc::ConfigError, why); };
  validate(cfg.blob_spec);
  validate(cfg.sim);
  validate(cfg.cluster);
  if (cfg.seeds < 1) fail("seeds must be >= 1");
  if (cfg.budgets.empty()) fail("budgets must not be empty");
  if (cfg.methods.empty()) fail("methods must not be empty");
  if (cfg.policies.empty()) fail("policies must not be empty");
  if (cfg.test_per_class < 1) fail("test_per_class must be >= 1");
  const std::size_t pool = cfg.blob_spec.classes * cfg.blob_spec.per_class;
  for (std::size_t b : cfg.budgets) {
    if (b > pool) fail("budget " + std::to_string(b) + " exceeds pool size " + std::to_string(pool));
  }
  std::set<std::string> seen;
  for (const auto& m : cfg.methods) {
    if (m.name.empty()) fail("every method needs a name");
    if (!seen.insert(m.name).second) fail("duplicate method name '" + m.name + "'");
  }
  seen.clear();
  for (const auto& p : cfg.policies) {
    if (p.name.empty()) fail("every policy needs a name");
    if (!seen.insert(p.name).second) fail("duplicate policy name '" + p.name + "'");
    if (!(p.n0_fraction >= 0.0 && p.n0_fraction <= 1.0)) fail("policy '" + p.name + "': n0_fraction must lie in [0, 1]");
    for (std::size_t b : cfg.budgets) {
      try {
        validate(resolve_policy(p, b, cfg.sim.epochs));
      } catch (const Error& e) {
        fail("policy '" + p.name + "' at budget " + std::to_string(b) + ": " + e.what());
      }
    }
  }
  if (cfg.baseline) {
    const bool found = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                   [&](const BenchMethod& m) { return m.name == *cfg.baseline; });
    if (!found) fail("baseline '" + *cfg.baseline + "' is not a listed method");
  }
}

PolicySpec resolve_policy(const BenchPolicy& policy, std::size_t n, std::size_t epochs) {
  PolicySpec s;
  s.kind = policy.kind;
  s.n = n;
  s.epochs = epochs;
  s.m = policy.m;
  switch (policy.kind) {
    case PolicyKind::Naive:
      s.n0 = n;
      break;
    case PolicyKind::LateJump:
      s.n0 = static_cast<std::size_t>(std::floor(policy.n0_fraction * static_cast<double>(n)));
      s.e0 = s.ef = policy.e0;
      break;
    default:
      s.n0 = static_cast<std::size_t>(std::floor(policy.n0_fraction * static_cast<double>(n)));
      s.e0 = policy.e0;
      s.ef = policy.ef == 0 ? epochs : policy.ef;
      break;
  }
  return s;
}

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::uint64_t data_hash(const Dataset& d) {
  const auto bytes = encode_embeddings_bin(d.x);
  std::uint64_t h = fnv1a(0xCBF29CE484222325ULL, bytes.data(), bytes.size());
  for (const auto& [id, label] : d.y.labels) {
    std::uint8_t buf[12];
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<std::uint8_t>(id >> (8 * b));
    for (int b = 0; b < 4; ++b) buf[8 + b] = static_cast<std::uint8_t>(label >> (8 * b));
    h = fnv1a(h, buf, sizeof buf);
  }
  return h;
}

ComparisonReport run_comparison(const BenchConfig& cfg) {
  validate(cfg);
  ComparisonReport report;
  for (std::size_t s = 0; s < cfg.seeds; ++s) report.seed_values.push_back(derive_seed(cfg.base_seed, s));

  std::vector<SeedOutcome> outcomes(cfg.seeds);
  std::size_t workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  workers = std::min(workers, cfg.seeds);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t s = next++; s < cfg.seeds; s = next++) {
      try {
        outcomes[s] = run_seed(cfg, report.seed_values[s]);
      } catch (const std::exception& e) {
        outcomes[s].error = "seed " + std::to_string(s) + ": " + e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& o : outcomes) {
    if (!o.error.empty()) throw Error(Errc::ConfigError, o.error);
  }

  std::optional<std::size_t> base_index;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const bool match = cfg.baseline ? cfg.methods[mi].name == *cfg.baseline
                                    : cfg.methods[mi].selection == SelectionMethod::Random;
    if (match) {
      base_index = mi;
      break;
    }
  }
  if (base_index) report.baseline = cfg.methods[*base_index].name;

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
      for (std::size_t pi = 0; pi < cfg.policies.size(); ++pi) {
        ComparisonCell cell;
        cell.method = cfg.methods[mi].name;
        cell.budget = cfg.budgets[bi];
        cell.policy = cfg.policies[pi].name;
        std::vector<double> deltas;
        std::size_t wins = 0;
        for (std::size_t s = 0; s < cfg.seeds; ++s) {
          const double acc = outcomes[s].accuracy[flat(cfg, mi, bi, pi)];
          cell.per_seed.push_back(acc);
          cell.data_hashes.push_back(outcomes[s].hash);
          if (base_index) {
            const double base = outcomes[s].accuracy[flat(cfg, *base_index, bi, pi)];
            deltas.push_back(acc - base);
            if (acc >= base) ++wins;
          }
        }
        cell.mean = sample_mean(cell.per_seed);
        cell.std = sample_std(cell.per_seed);
        if (base_index) {
          cell.delta_vs_random = sample_mean(deltas);
          cell.win_rate = static_cast<double>(wins) / static_cast<double>(cfg.seeds);
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

Summary summarize(const ComparisonReport& report) {
  Summary out;
  std::ostringstream csv;
  csv << "method,budget,policy,mean,std,delta_vs_random,win_rate\n";
  for (const auto& c : report.cells) {
    csv << c.method << ',' << c.budget << ',' << c.policy << ',' << full(c.mean) << ',' << full(c.std) << ','
        << (c.delta_vs_random ? full(*c.delta_vs_random) : "") << ',' << (c.win_rate ? full(*c.win_rate) : "")
        << '\n';
  }
  out.csv = csv.str();

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"method", "budget", "policy", "acc% mean±std", "Δ vs " + (report.baseline.empty() ? std::string("-") : report.baseline) + " (pp)", "win rate"});
  for (const auto& c : report.cells) {
    rows.push_back({c.method, std::to_string(c.budget), c.policy,
                    fmt("%.2f", 100.0 * c.mean) + "±" + fmt("%.2f", 100.0 * c.std),
                    c.delta_vs_random ? fmt("%+.2f", 100.0 * *c.delta_vs_random) : "-",
                    c.win_rate ? fmt("%.2f", *c.win_rate) : "-"});
  }
  // Display width: count UTF-8 code points, not bytes.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) widths[j] = std::max(widths[j], width(r[j]));
  }
  std::ostringstream table;
  const std::size_t n_seeds = report.cells.empty() ? 0 : report.cells.front().per_seed.size();
  table << "# accuracy over " << n_seeds << " paired seeds; ± is the sample standard deviation\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < rows[r].size(); ++j) {
      if (j) table << "  ";
      table << rows[r][j] << std::string(widths[j] - width(rows[r][j]), ' ');
    }
    table << '\n';
  }
  out.table = table.str();
  return out;
}

std::string plot_data_csv(const ComparisonReport& report) {
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, const ComparisonCell*>> series;
  for (const auto& c : report.cells) series[{c.method, c.policy}][c.budget] = &c;
  std::ostringstream out;
  out << "method,policy,budget,mean,std\n";
  for (const auto& [key, points] : series) {
    for (const auto& [budget, cell] : points) {
      out << key.first << ',' << key.second << ',' << budget << ',' << full(cell->mean) << ',' << full(cell->std)
          << '\n';
    }
  }
  return out.str();
}

Json to_json(const ComparisonReport& report) {
  Json j;
  j["baseline"] = report.baseline;
  j["std_convention"] = "sample (n-1)";
  j["seed_values"] = report.seed_values;
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    Json cj;
    cj["method"] = c.method;
    cj["budget"] = c.budget;
    cj["policy"] = c.policy;
    cj["mean"] = c.mean;
    cj["std"] = c.std;
    cj["delta_vs_random"] = c.delta_vs_random ? Json(*c.delta_vs_random) : Json(nullptr);
    cj["win_rate"] = c.win_rate ? Json(*c.win_rate) : Json(nullptr);
    cj["per_seed"] = c.per_seed;
    cj["data_hashes"] = c.data_hashes;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

BenchConfig bench_config_from_json(const Json& j) {
  check_keys(j,
             {"blob_spec", "test_per_class", "budgets", "methods", "policies", "sim", "cluster", "seeds",
              "base_seed", "baseline", "proxy_temperature", "threads"},
             "bench config");
  BenchConfig cfg;
  try {
    if (j.contains("blob_spec")) cfg.blob_spec = blob_spec_from_json(j["blob_spec"]);
    if (j.contains("sim")) cfg.sim = sim_config_from_json(j["sim"]);
    if (j.contains("cluster")) cfg.cluster = cluster_params_from_json(j["cluster"]);
    if (j.contains("test_per_class")) cfg.test_per_class = j["test_per_class"].get<std::size_t>();
    if (j.contains("budgets")) cfg.budgets = j["budgets"].get<std::vector<std::size_t>>();
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::size_t>();
    if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<Seed>();
    if (j.contains("baseline") && !j["baseline"].is_null()) cfg.baseline = j["baseline"].get<std::string>();
    if (j.contains("proxy_temperature")) cfg.proxy_temperature = j["proxy_temperature"].get<double>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<std::size_t>();
    for (const auto& mj : j.value("methods", Json::array())) {
      check_keys(mj, {"name", "selection", "mode", "clusterer"}, "method");
      BenchMethod m;
      m.name = mj.at("name").get<std::string>();
      m.selection = parse_selection_method(mj.value("selection", std::string("random")));
      m.mode = parse_selection_mode(mj.value("mode", std::string("imbalanced")));
      if (mj.contains("clusterer")) m.clusterer = parse_clusterer(mj["clusterer"].get<std::string>());
      cfg.methods.push_back(std::move(m));
    }
    for (const auto& pj : j.value("policies", Json::array())) {
      check_keys(pj, {"name", "kind", "n0_fraction", "e0", "ef", "m", "ranking"}, "policy");
      BenchPolicy p;
      p.name = pj.at("name").get<std::string>();
      p.kind = parse_policy_kind(pj.value("kind", std::string("naive")));
      p.n0_fraction = pj.value("n0_fraction", 0.0);
      p.e0 = pj.value("e0", std::size_t{0});
      p.ef = pj.value("ef", std::size_t{0});
      p.m = pj.value("m", std::size_t{1});
      p.ranking = parse_ranking(pj.value("ranking", std::string("random")));
      cfg.policies.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("bench config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

Json to_json(const BenchConfig& cfg) {
  Json j;
  j["blob_spec"] = to_json(cfg.blob_spec);
  j["test_per_class"] = cfg.test_per_class;
  j["budgets"] = cfg.budgets;
  Json methods = Json::array();
  for (const auto& m : cfg.methods) {
    methods.push_back(Json{{"name", m.name},
                           {"selection", to_string(m.selection)},
                           {"mode", to_string(m.mode)},
                           {"clusterer", to_string(m.clusterer)}});
  }
  j["methods"] = std::move(methods);
  Json policies = Json::array();
  for (const auto& p : cfg.policies) {
    policies.push_back(Json{{"name", p.name},
                            {"kind", to_string(p.kind)},
                            {"n0_fraction", p.n0_fraction},
                            {"e0", p.e0},
                            {"ef", p.ef},
                            {"m", p.m},
                            {"ranking", to_string(p.ranking)}});
  }
  j["policies"] = std::move(policies);
  j["sim"] = to_json(cfg.sim);
  j["cluster"] = to_json(cfg.cluster);
  j["seeds"] = cfg.seeds;
  j["base_seed"] = cfg.base_seed;
  j["baseline"] = cfg.baseline ? Json(*cfg.baseline) : Json(nullptr);
  j["proxy_temperature"] = cfg.proxy_temperature;
  j["threads"] = cfg.threads;
  return j;
}

}  // namespace labelsel
