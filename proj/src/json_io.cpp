#include "labelsel/json_io.hpp"

#include <algorithm>
#include <fstream>

namespace labelsel {

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& value) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    value = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T read_req(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(Errc::ConfigError, where + ": missing key '" + key + "'");
  T value{};
  read_opt(j, key, value);
  return value;
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::ConfigError, where + " must be an object");
}

}  // namespace

const char* version_string() noexcept { return "0.1.0"; }

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(Errc::ConfigError, where + ": unknown key '" + key + "'");
    }
  }
}

Json to_json(const SelectionResult& s) {
  Json j;
  j["method"] = to_string(s.method);
  j["mode"] = to_string(s.mode);
  j["seed"] = s.seed;
  j["clusterer"] = s.clusterer ? Json(std::string(to_string(*s.clusterer))) : Json(nullptr);
  j["indices"] = s.indices;
  if (s.per_class_counts) {
    Json counts = Json::object();
    for (const auto& [c, n] : *s.per_class_counts) counts[std::to_string(c)] = n;
    j["per_class_counts"] = std::move(counts);
  }
  return j;
}

SelectionResult selection_from_json(const Json& j) {
  require_object(j, "selection");
  SelectionResult s;
  s.method = parse_selection_method(read_req<std::string>(j, "method", "selection"));
  s.mode = parse_selection_mode(read_req<std::string>(j, "mode", "selection"));
  s.seed = read_req<Seed>(j, "seed", "selection");
  if (j.contains("clusterer") && !j["clusterer"].is_null()) {
    s.clusterer = parse_clusterer(j["clusterer"].get<std::string>());
  }
  s.indices = read_req<std::vector<std::size_t>>(j, "indices", "selection");
  if (!std::is_sorted(s.indices.begin(), s.indices.end()) ||
      std::adjacent_find(s.indices.begin(), s.indices.end()) != s.indices.end()) {
    throw Error(Errc::ConfigError, "selection indices must be strictly ascending");
  }
  if (j.contains("per_class_counts")) {
    std::map<ClassIndex, std::size_t> counts;
    for (const auto& [key, value] : j["per_class_counts"].items()) {
      counts[static_cast<ClassIndex>(std::stoul(key))] = value.get<std::size_t>();
    }
    s.per_class_counts = std::move(counts);
  }
  return s;
}

Json to_json(const OrderedSelection& o) {
  Json j;
  j["ranking"] = to_string(o.ranking);
  j["order"] = o.order;
  if (o.scores) j["scores"] = *o.scores;
  j["base"] = to_json(o.base);
  return j;
}

OrderedSelection ordering_from_json(const Json& j) {
  require_object(j, "ordering");
  OrderedSelection o;
  o.ranking = parse_ranking(read_req<std::string>(j, "ranking", "ordering"));
  o.order = read_req<std::vector<std::size_t>>(j, "order", "ordering");
  if (j.contains("scores")) o.scores = j["scores"].get<std::vector<double>>();
  if (j.contains("base")) {
    o.base = selection_from_json(j["base"]);
  } else {
    o.base.indices = o.order;
    std::sort(o.base.indices.begin(), o.base.indices.end());
  }
  auto sorted = o.order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != o.base.indices) throw Error(Errc::ConfigError, "ordering is not a permutation of its selection");
  return o;
}

Json to_json(const BlobSpec& b) {
  return Json{{"classes", b.classes}, {"dim", b.dim},           {"per_class", b.per_class},
              {"spread", b.spread},   {"separation", b.separation}, {"seed", b.seed}};
}

BlobSpec blob_spec_from_json(const Json& j) {
  check_keys(j, {"classes", "dim", "per_class", "spread", "separation", "seed"}, "blob_spec");
  BlobSpec b;
  read_opt(j, "classes", b.classes);
  read_opt(j, "dim", b.dim);
  read_opt(j, "per_class", b.per_class);
  read_opt(j, "spread", b.spread);
  read_opt(j, "separation", b.separation);
  read_opt(j, "seed", b.seed);
  validate(b);
  return b;
}

Json to_json(const SimConfig& c) {
  return Json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"alpha", c.alpha},
              {"tau", c.tau},
              {"sigma_weak", c.sigma_weak},
              {"sigma_strong", c.sigma_strong},
              {"unsup_mode", to_string(c.unsup_mode)},
              {"ema_momentum", c.ema_momentum},
              {"batch_size", c.batch_size},
              {"unlabelled_ratio", c.unlabelled_ratio},
              {"init_scale", c.init_scale},
              {"seed", c.seed}};
}

SimConfig sim_config_from_json(const Json& j) {
  check_keys(j,
             {"epochs", "learning_rate", "alpha", "tau", "sigma_weak", "sigma_strong", "unsup_mode",
              "ema_momentum", "batch_size", "unlabelled_ratio", "init_scale", "seed"},
             "sim");
  SimConfig c;
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "alpha", c.alpha);
  read_opt(j, "tau", c.tau);
  read_opt(j, "sigma_weak", c.sigma_weak);
  read_opt(j, "sigma_strong", c.sigma_strong);
  if (j.contains("unsup_mode")) c.unsup_mode = parse_unsup_mode(j["unsup_mode"].get<std::string>());
  read_opt(j, "ema_momentum", c.ema_momentum);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "unlabelled_ratio", c.unlabelled_ratio);
  read_opt(j, "init_scale", c.init_scale);
  read_opt(j, "seed", c.seed);
  validate(c);
  return c;
}

Json to_json(const PolicySpec& p) {
  return Json{{"kind", to_string(p.kind)}, {"n", p.n},   {"n0", p.n0}, {"epochs", p.epochs},
              {"e0", p.e0},                {"ef", p.ef}, {"m", p.m}};
}

PolicySpec policy_spec_from_json(const Json& j) {
  check_keys(j, {"kind", "n", "n0", "epochs", "e0", "ef", "m"}, "policy");
  PolicySpec p;
  p.kind = parse_policy_kind(read_req<std::string>(j, "kind", "policy"));
  read_opt(j, "n", p.n);
  read_opt(j, "n0", p.n0);
  read_opt(j, "epochs", p.epochs);
  read_opt(j, "e0", p.e0);
  read_opt(j, "ef", p.ef);
  read_opt(j, "m", p.m);
  validate(p);
  return p;
}

Json to_json(const ClusterParams& p) {
  return Json{{"max_iters", p.max_iters},
              {"rel_tol", p.rel_tol},
              {"restarts", p.restarts},
              {"plusplus_variant", to_string(p.plusplus_variant)}};
}

ClusterParams cluster_params_from_json(const Json& j) {
  check_keys(j, {"max_iters", "rel_tol", "restarts", "plusplus_variant"}, "cluster");
  ClusterParams p;
  read_opt(j, "max_iters", p.max_iters);
  read_opt(j, "rel_tol", p.rel_tol);
  read_opt(j, "restarts", p.restarts);
  if (j.contains("plusplus_variant")) {
    p.plusplus_variant = parse_plusplus_variant(j["plusplus_variant"].get<std::string>());
  }
  validate(p);
  return p;
}

Json to_json(const ModelParams& p) {
  Json j{{"classes", p.classes}, {"dim", p.dim}, {"weights", p.weights}, {"biases", p.biases}};
  return j;
}

Json to_json(const TrialReport& r) {
  Json j;
  j["test_accuracy"] = r.test_accuracy;
  j["train_accuracy"] = r.train_accuracy;
  j["train_loss_curve"] = r.train_loss_curve;
  j["pseudo_label_rate_curve"] = r.pseudo_label_rate_curve;
  j["active_count_curve"] = r.active_count_curve;
  j["config"] = to_json(r.config);
  j["seed"] = r.config.seed;
  j["model"] = to_json(r.model);
  return j;
}

Json make_meta(const std::string& command, const Json& flags) {
  return Json{{"tool", kToolName}, {"version", version_string()}, {"command", command}, {"flags", flags}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  try {
    return Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

}  // namespace labelsel
