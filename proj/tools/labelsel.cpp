#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "labelsel/bench.hpp"
#include "labelsel/cluster.hpp"
#include "labelsel/curriculum.hpp"
#include "labelsel/ingest.hpp"
#include "labelsel/json_io.hpp"
#include "labelsel/policy.hpp"
#include "labelsel/select.hpp"
#include "labelsel/sslsim.hpp"

namespace fs = std::filesystem;
using namespace labelsel;

namespace {

// Bad flags, files or config contents: reported before any module work runs.
struct UsageError {
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw UsageError{message}; }

std::string describe(const Error& e) {
  std::string out = e.what();
  if (e.row()) out += " (row " + std::to_string(*e.row());
  if (e.col()) out += (e.row() ? ", col " : " (col ") + std::to_string(*e.col());
  if (e.row() || e.col()) out += ")";
  return out;
}

void require_file(const std::string& flag, const fs::path& p) {
  if (!fs::is_regular_file(p)) usage_error(flag + ": no such file '" + p.string() + "'");
}

// Input loading errors name the flag that pointed at the file.
template <typename F>
auto load(const std::string& flag, const fs::path& p, F&& reader) {
  require_file(flag, p);
  try {
    return reader(p);
  } catch (const Error& e) {
    usage_error(flag + " '" + p.string() + "': " + describe(e));
  }
}

EmbeddingMatrix read_embeddings_any(const fs::path& p) {
  char magic[4] = {};
  std::ifstream in(p, std::ios::binary);
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string(magic, 4) == "EMB1") return read_embeddings_bin(p);
  return read_embeddings_csv(p);
}

std::vector<std::string> meta_comments(const Json& meta) { return {meta.dump()}; }

Json unwrap(const Json& j, const char* key) { return j.contains(key) ? j.at(key) : j; }

fs::path resolve_near(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ---------------------------------------------------------------- gen-data

struct GenFlags {
  BlobSpec spec;
  std::size_t test_per_class = 200;
  double proxy_temperature = 1.0;
  std::string out;
};

void add_gen_data(CLI::App& app, GenFlags& f) {
  auto* c = app.add_subcommand("gen-data", "Generate a gaussian blob dataset with a held-out split");
  c->add_option("--classes", f.spec.classes, "Number of classes")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--dim", f.spec.dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--per-class", f.spec.per_class, "Training rows per class")->capture_default_str();
  c->add_option("--spread", f.spec.spread, "Per-coordinate standard deviation")->capture_default_str();
  c->add_option("--separation", f.spec.separation, "Distance between class means")->capture_default_str();
  c->add_option("--seed", f.spec.seed, "Random seed")->capture_default_str();
  c->add_option("--test-per-class", f.test_per_class, "Held-out rows per class")->capture_default_str();
  c->add_option("--proxy-temperature", f.proxy_temperature, "Softmax temperature of the proxy predictions")
      ->capture_default_str();
  c->add_option("--out", f.out, "Output directory (train.emb, train_labels.csv, test.emb, test_labels.csv, "
                                "predictions.csv, meta.json)")
      ->required();
}

int run_gen_data(const GenFlags& f) {
  try {
    validate(f.spec);
  } catch (const Error& e) {
    usage_error("gen-data: " + describe(e));
  }
  if (!(f.proxy_temperature > 0)) usage_error("--proxy-temperature: must be > 0");
  Json flags = to_json(f.spec);
  flags["test_per_class"] = f.test_per_class;
  flags["proxy_temperature"] = f.proxy_temperature;
  flags["out"] = f.out;
  const Json meta = make_meta("gen-data", flags);

  const fs::path dir(f.out);
  fs::create_directories(dir);
  const auto train_set = gen_blobs(f.spec);
  const auto test_set = gen_blobs_test(f.spec, f.test_per_class);
  const auto comments = meta_comments(meta);
  write_embeddings_bin(train_set.x, dir / "train.emb");
  write_labels(train_set.y, dir / "train_labels.csv", comments);
  write_embeddings_bin(test_set.x, dir / "test.emb");
  write_labels(test_set.y, dir / "test_labels.csv", comments);
  const auto preds = proxy_predictions(train_set.x, f.spec.classes, f.proxy_temperature, derive_seed(f.spec.seed, 3));
  write_predictions(preds, dir / "predictions.csv", comments);
  write_json_file(Json{{"meta", meta}}, dir / "meta.json");
  return 0;
}

// ------------------------------------------------------------------ select

struct SelectFlags {
  std::string embeddings;
  std::string labels;
  std::size_t n = 0;
  std::string method = "cluster-select";
  std::string clusterer = "kmeans++";
  std::string mode = "imbalanced";
  Seed seed = 0;
  ClusterParams cluster;
  std::string plusplus_variant = "greedy-farthest";
  std::string out;
};

void add_select(CLI::App& app, SelectFlags& f) {
  auto* c = app.add_subcommand("select", "Choose n rows to label");
  c->add_option("--embeddings", f.embeddings, "Embedding matrix (EMB1 or CSV)")->required();
  c->add_option("--n", f.n, "Labelling budget")->required();
  c->add_option("--method", f.method, "cluster-select or random")->capture_default_str();
  c->add_option("--clusterer", f.clusterer, "kmeans, kmeans++, bisecting or bisecting++")->capture_default_str();
  c->add_option("--mode", f.mode, "imbalanced or balanced (balanced needs --labels)")->capture_default_str();
  c->add_option("--labels", f.labels, "Labels CSV, required for balanced mode");
  c->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  c->add_option("--restarts", f.cluster.restarts, "K-means restarts")->capture_default_str();
  c->add_option("--max-iters", f.cluster.max_iters, "Lloyd iteration cap")->capture_default_str();
  c->add_option("--rel-tol", f.cluster.rel_tol, "Relative WCSS improvement that stops Lloyd")->capture_default_str();
  c->add_option("--plusplus-variant", f.plusplus_variant, "greedy-farthest or d2-sampling")->capture_default_str();
  c->add_option("--out", f.out, "Selection JSON")->required();
}

template <typename T, typename P>
T parse_flag(const std::string& flag, const std::string& text, P parser) {
  try {
    return parser(text);
  } catch (const Error& e) {
    usage_error(flag + ": " + describe(e));
  }
}

int run_select(SelectFlags f) {
  const auto method = parse_flag<SelectionMethod>("--method", f.method, parse_selection_method);
  const auto clusterer = parse_flag<Clusterer>("--clusterer", f.clusterer, parse_clusterer);
  const auto mode = parse_flag<SelectionMode>("--mode", f.mode, parse_selection_mode);
  f.cluster.plusplus_variant = parse_flag<PlusPlusVariant>("--plusplus-variant", f.plusplus_variant,
                                                           parse_plusplus_variant);
  if (mode == SelectionMode::Balanced && f.labels.empty()) usage_error("--labels: required when --mode is balanced");
  try {
    validate(f.cluster);
  } catch (const Error& e) {
    usage_error("select: " + describe(e));
  }
  const auto m = load("--embeddings", f.embeddings, read_embeddings_any);
  std::optional<LabelAssignment> labels;
  if (!f.labels.empty()) labels = load("--labels", f.labels, read_labels);

  SelectionResult sel;
  if (method == SelectionMethod::Random) {
    sel = mode == SelectionMode::Balanced ? select_random_balanced(m, *labels, f.n, f.seed)
                                          : select_random(m.rows(), f.n, f.seed);
  } else if (mode == SelectionMode::Balanced) {
    sel = select_balanced(m, *labels, f.n, clusterer, f.cluster, f.seed);
  } else {
    sel = select_by_clustering(m, f.n, clusterer, f.cluster, f.seed);
  }
  if (labels && !sel.per_class_counts) attach_class_counts(sel, m, *labels);

  Json flags{{"embeddings", f.embeddings},
             {"labels", f.labels.empty() ? Json(nullptr) : Json(f.labels)},
             {"n", f.n},
             {"method", f.method},
             {"clusterer", f.clusterer},
             {"mode", f.mode},
             {"seed", f.seed},
             {"cluster", to_json(f.cluster)},
             {"out", f.out}};
  write_json_file(Json{{"meta", make_meta("select", flags)}, {"selection", to_json(sel)}}, f.out);
  return 0;
}

// -------------------------------------------------------------- curriculum

struct CurriculumFlags {
  std::string predictions;
  std::string selection;
  std::string ranking = "entropy-curriculum";
  Seed seed = 0;
  std::string out;
};

void add_curriculum(CLI::App& app, CurriculumFlags& f) {
  auto* c = app.add_subcommand("curriculum", "Order a selection from easy to hard");
  c->add_option("--predictions", f.predictions, "Prediction CSV (id,p0,...)")->required();
  c->add_option("--selection", f.selection, "Selection JSON")->required();
  c->add_option("--ranking", f.ranking, "entropy-curriculum or random")->capture_default_str();
  c->add_option("--seed", f.seed, "Seed for random ranking")->capture_default_str();
  c->add_option("--out", f.out, "Ordering JSON")->required();
}

int run_curriculum(const CurriculumFlags& f) {
  const auto ranking = parse_flag<Ranking>("--ranking", f.ranking, parse_ranking);
  const auto sel = load("--selection", f.selection,
                        [](const fs::path& p) { return selection_from_json(unwrap(read_json_file(p), "selection")); });
  OrderedSelection ord;
  if (ranking == Ranking::EntropyCurriculum) {
    const auto preds = load("--predictions", f.predictions, read_predictions);
    ord = curriculum_order(preds, sel);
  } else {
    require_file("--predictions", f.predictions);
    ord = random_order(sel, f.seed);
  }
  Json flags{{"predictions", f.predictions},
             {"selection", f.selection},
             {"ranking", f.ranking},
             {"seed", f.seed},
             {"out", f.out}};
  write_json_file(Json{{"meta", make_meta("curriculum", flags)}, {"ordering", to_json(ord)}}, f.out);
  return 0;
}

// ---------------------------------------------------------------- schedule

struct ScheduleFlags {
  std::string policy;
  std::size_t n = 0;
  std::optional<std::size_t> n0;
  std::size_t epochs = 0;
  std::size_t e0 = 0;
  std::optional<std::size_t> ef;
  std::size_t m = 1;
  std::string out;
};

void add_schedule(CLI::App& app, ScheduleFlags& f) {
  auto* c = app.add_subcommand("schedule", "Per-epoch labelled counts for an injection policy");
  c->add_option("--policy", f.policy, "naive, linear, step, late-jump or late-linear")->required();
  c->add_option("--n", f.n, "Total labelled rows")->required();
  c->add_option("--n0", f.n0, "Rows active before e0 (default: n for naive, 0 otherwise)");
  c->add_option("--epochs", f.epochs, "Training epochs")->required();
  c->add_option("--e0", f.e0, "First epoch of the ramp")->capture_default_str();
  c->add_option("--ef", f.ef, "Epoch from which all n rows are active (default: epochs; e0 for late-jump)");
  c->add_option("--m", f.m, "Chunk size for step")->capture_default_str();
  c->add_option("--out", f.out, "Schedule CSV")->required();
}

int run_schedule(const ScheduleFlags& f) {
  PolicySpec spec;
  spec.kind = parse_flag<PolicyKind>("--policy", f.policy, parse_policy_kind);
  spec.n = f.n;
  spec.n0 = f.n0.value_or(spec.kind == PolicyKind::Naive ? f.n : 0);
  spec.epochs = f.epochs;
  spec.e0 = f.e0;
  spec.ef = f.ef.value_or(spec.kind == PolicyKind::LateJump ? f.e0 : f.epochs);
  spec.m = f.m;
  try {
    validate(spec);
  } catch (const Error& e) {
    usage_error("schedule: " + describe(e));
  }
  Json flags = to_json(spec);
  flags["out"] = f.out;
  write_schedule_csv(build_schedule(spec), f.out, meta_comments(make_meta("schedule", flags)));
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string config;
  std::string out;
};

void add_simulate(CLI::App& app, SimulateFlags& f) {
  auto* c = app.add_subcommand("simulate", "Train the semi-supervised simulator on a labelled selection");
  c->add_option("--config", f.config,
                "JSON with train_embeddings, train_labels, test_embeddings, test_labels, selection, "
                "optional ordering and schedule paths (relative to the config), and a sim block")
      ->required();
  c->add_option("--out", f.out, "TrialReport JSON")->required();
}

int run_simulate(const SimulateFlags& f) {
  const auto cfg_json = load("--config", f.config, read_json_file);
  const fs::path base = fs::path(f.config).parent_path();
  SimConfig sim;
  try {
    check_keys(cfg_json,
               {"train_embeddings", "train_labels", "test_embeddings", "test_labels", "selection", "ordering",
                "schedule", "sim"},
               "simulate config");
    for (const char* key : {"train_embeddings", "train_labels", "test_embeddings", "test_labels", "selection"}) {
      if (!cfg_json.contains(key)) throw Error(Errc::ConfigError, std::string("missing key '") + key + "'");
    }
    sim = sim_config_from_json(cfg_json.value("sim", Json::object()));
    validate(sim);
  } catch (const Error& e) {
    usage_error("--config '" + f.config + "': " + describe(e));
  } catch (const nlohmann::json::exception& e) {
    usage_error("--config '" + f.config + "': " + e.what());
  }
  auto path_of = [&](const char* key) { return resolve_near(base, cfg_json.at(key).get<std::string>()); };
  const Dataset pool{load("--config:train_embeddings", path_of("train_embeddings"), read_embeddings_any),
                     load("--config:train_labels", path_of("train_labels"), read_labels)};
  const Dataset test{load("--config:test_embeddings", path_of("test_embeddings"), read_embeddings_any),
                     load("--config:test_labels", path_of("test_labels"), read_labels)};
  const auto sel = load("--config:selection", path_of("selection"), [](const fs::path& p) {
    return selection_from_json(unwrap(read_json_file(p), "selection"));
  });
  const OrderedSelection ord =
      cfg_json.contains("ordering")
          ? load("--config:ordering", path_of("ordering"),
                 [](const fs::path& p) { return ordering_from_json(unwrap(read_json_file(p), "ordering")); })
          : random_order(sel, derive_seed(sim.seed, 4));
  const SupervisionSchedule sched =
      cfg_json.contains("schedule")
          ? load("--config:schedule", path_of("schedule"), read_schedule_csv)
          : SupervisionSchedule{std::vector<std::size_t>(sim.epochs, sel.indices.size())};

  const auto report = train(pool, test, ord, sched, sim);
  Json flags{{"config", f.config}, {"out", f.out}, {"seed", sim.seed}, {"resolved", cfg_json}};
  flags["resolved"]["sim"] = to_json(sim);
  write_json_file(Json{{"meta", make_meta("simulate", flags)}, {"report", to_json(report)}}, f.out);
  return 0;
}

// ------------------------------------------------------------------- bench

struct BenchFlags {
  std::string config;
  std::string out_dir;
  bool plot_data = false;
};

void add_bench(CLI::App& app, BenchFlags& f) {
  auto* c = app.add_subcommand("bench", "Compare selection methods and policies over paired seeds");
  c->add_option("--config", f.config, "Benchmark config JSON")->required();
  c->add_option("--out-dir", f.out_dir, "Directory for summary.csv, summary.txt and report.json")->required();
  c->add_flag("--plot-data", f.plot_data, "Also write plot_data.csv (accuracy vs budget)");
}

int run_bench(const BenchFlags& f) {
  const auto cfg_json = load("--config", f.config, read_json_file);
  BenchConfig cfg;
  try {
    cfg = bench_config_from_json(cfg_json);
    validate(cfg);
  } catch (const Error& e) {
    usage_error("--config '" + f.config + "': " + describe(e));
  } catch (const nlohmann::json::exception& e) {
    usage_error("--config '" + f.config + "': " + e.what());
  }
  const auto report = run_comparison(cfg);
  Json flags{{"config", f.config}, {"out_dir", f.out_dir}, {"plot_data", f.plot_data}, {"seed", cfg.base_seed},
             {"resolved", to_json(cfg)}};
  const Json meta = make_meta("bench", flags);

  const fs::path dir(f.out_dir);
  fs::create_directories(dir);
  const auto summary = summarize(report);
  auto write_text = [](const fs::path& p, const std::string& header, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + p.string());
    out << header << body;
  };
  const std::string header = "# " + meta.dump() + "\n";
  write_text(dir / "summary.csv", header, summary.csv);
  write_text(dir / "summary.txt", header, summary.table);
  if (f.plot_data) write_text(dir / "plot_data.csv", header, plot_data_csv(report));
  write_json_file(Json{{"meta", meta}, {"report", to_json(report)}}, dir / "report.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label selection, curriculum ordering and supervision scheduling for semi-supervised learning",
               kToolName};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1, 1);

  GenFlags gen;
  SelectFlags sel;
  CurriculumFlags cur;
  ScheduleFlags sch;
  SimulateFlags sim;
  BenchFlags bench;
  add_gen_data(app, gen);
  add_select(app, sel);
  add_curriculum(app, cur);
  add_schedule(app, sch);
  add_simulate(app, sim);
  add_bench(app, bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand("gen-data")) return run_gen_data(gen);
    if (app.got_subcommand("select")) return run_select(sel);
    if (app.got_subcommand("curriculum")) return run_curriculum(cur);
    if (app.got_subcommand("schedule")) return run_schedule(sch);
    if (app.got_subcommand("simulate")) return run_simulate(sim);
    if (app.got_subcommand("bench")) return run_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << describe(e) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
