#include "labelsel/sslsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "labelsel/cluster.hpp"

namespace labelsel {

namespace {

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

std::vector<double> logits(const std::vector<double>& w, const std::vector<double>& b, std::size_t classes,
                           std::span<const double> x) {
  const std::size_t dim = x.size();
  std::vector<double> z(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double acc = b[c];
    const double* wc = w.data() + c * dim;
    for (std::size_t j = 0; j < dim; ++j) acc += wc[j] * x[j];
    z[c] = acc;
  }
  return z;
}

std::vector<double> softmax_of(const std::vector<double>& w, const std::vector<double>& b, std::size_t classes,
                               std::span<const double> x) {
  auto z = logits(w, b, classes, x);
  softmax_inplace(z);
  return z;
}

// grad += scale * g (outer) x, for one row.
void accumulate(LossGrad& out, const std::vector<double>& g, std::span<const double> x, double scale) {
  const std::size_t dim = x.size();
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double gc = scale * g[c];
    out.grad_biases[c] += gc;
    double* row = out.grad_weights.data() + c * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] += gc * x[j];
  }
}

// Gradient w.r.t. the logits of p = softmax(z) of sum_j p_j u_j for a fixed
// upstream vector u: p * (u - <p, u>).
std::vector<double> softmax_backward(const std::vector<double>& p, const std::vector<double>& u) {
  double dot = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * u[j];
  std::vector<double> g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) g[j] = p[j] * (u[j] - dot);
  return g;
}

std::vector<double> orthonormal_means(const BlobSpec& spec, Rng& rng) {
  const std::size_t c = spec.classes;
  const std::size_t d = spec.dim;
  std::vector<double> basis;
  basis.reserve(c * d);
  while (basis.size() < c * d) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    const std::size_t have = basis.size() / d;
    for (std::size_t k = 0; k < have; ++k) {
      const double* b = basis.data() + k * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += v[j] * b[j];
      for (std::size_t j = 0; j < d; ++j) v[j] -= dot * b[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;  // nearly dependent draw
    for (double x : v) basis.push_back(x / norm);
  }
  // Orthonormal vectors scaled by s/sqrt(2) are pairwise exactly s apart.
  const double scale = spec.separation / std::sqrt(2.0);
  for (double& x : basis) x *= scale;
  return basis;
}

std::vector<double> lattice_means(const BlobSpec& spec, Rng& rng) {
  const std::size_t c = spec.classes;
  const std::size_t d = spec.dim;
  std::size_t side = 1;
  auto cells_for = [d](std::size_t s) {
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= s;
    return total;
  };
  while (cells_for(side) < c) ++side;
  const auto cells = rng.sample_without_replacement(cells_for(side), c);
  std::vector<double> means(c * d);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t cell = cells[k];
    for (std::size_t j = 0; j < d; ++j) {
      means[k * d + j] = spec.separation * static_cast<double>(cell % side);
      cell /= side;
    }
  }
  return means;
}

Dataset sample_blobs(const BlobSpec& spec, std::size_t per_class, Seed stream_seed) {
  const auto means = blob_means(spec);
  Rng rng(stream_seed);
  const std::size_t n = spec.classes * per_class;
  std::vector<float> data(n * spec.dim);
  LabelAssignment labels;
  labels.classes = spec.classes;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t row = k * per_class + i;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        data[row * spec.dim + j] = static_cast<float>(means[k * spec.dim + j] + spec.spread * rng.normal());
      }
      labels.labels.emplace(row, static_cast<ClassIndex>(k));
    }
  }
  return {EmbeddingMatrix::with_contiguous_ids(n, spec.dim, std::move(data)), std::move(labels)};
}

std::vector<double> row_as_double(std::span<const float> r) { return {r.begin(), r.end()}; }

}  // namespace

void validate(const BlobSpec& spec) {
  if (spec.classes < 2) throw Error(Errc::InvalidParams, "blob spec needs at least 2 classes");
  if (spec.dim < 1) throw Error(Errc::InvalidParams, "blob spec needs dim >= 1");
  if (spec.per_class < 1) throw Error(Errc::InvalidParams, "blob spec needs per_class >= 1");
  if (!(spec.spread > 0.0)) throw Error(Errc::InvalidParams, "blob spread must be positive");
  if (!(spec.separation > 0.0)) throw Error(Errc::InvalidParams, "blob separation must be positive");
}

std::vector<double> blob_means(const BlobSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, 0));
  return spec.dim >= spec.classes ? orthonormal_means(spec, rng) : lattice_means(spec, rng);
}

Dataset gen_blobs(const BlobSpec& spec) { return sample_blobs(spec, spec.per_class, derive_seed(spec.seed, 1)); }

Dataset gen_blobs_test(const BlobSpec& spec, std::size_t per_class) {
  if (per_class < 1) throw Error(Errc::InvalidParams, "test set needs per_class >= 1");
  return sample_blobs(spec, per_class, derive_seed(spec.seed, 2));
}

PredictionMatrix proxy_predictions(const EmbeddingMatrix& m, std::size_t k, double temperature, Seed seed) {
  if (k < 2) throw Error(Errc::InvalidParams, "proxy predictions need k >= 2");
  if (!(temperature > 0.0)) throw Error(Errc::InvalidParams, "temperature must be positive");
  const ClusterModel model = kmeans(m, k, InitMethod::PlusPlus, ClusterParams{}, seed);
  std::vector<double> probs;
  probs.reserve(m.rows() * k);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> z(k);
    for (std::size_t c = 0; c < k; ++c) z[c] = -std::sqrt(squared_distance(m.row(i), model.centroid(c))) / temperature;
    softmax_inplace(z);
    probs.insert(probs.end(), z.begin(), z.end());
  }
  return PredictionMatrix(m.ids(), k, std::move(probs));
}

void validate(const SimConfig& cfg) {
  auto fail = [](const std::string& why) { throw Error(Errc::InvalidParams, why); };
  if (!(cfg.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(cfg.alpha >= 0.0)) fail("alpha must be non-negative");
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (!(cfg.sigma_weak >= 0.0 && cfg.sigma_weak <= cfg.sigma_strong)) fail("need 0 <= sigma_weak <= sigma_strong");
  if (!(cfg.ema_momentum > 0.0 && cfg.ema_momentum < 1.0)) fail("ema_momentum must lie in (0, 1)");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.unlabelled_ratio < 1) fail("unlabelled_ratio must be >= 1");
  if (!(cfg.init_scale >= 0.0)) fail("init_scale must be non-negative");
}

ModelParams ModelParams::init(std::size_t classes, std::size_t dim, double scale, Rng& rng) {
  ModelParams p;
  p.classes = classes;
  p.dim = dim;
  p.weights.resize(classes * dim);
  for (double& w : p.weights) w = scale * rng.normal();
  p.biases.assign(classes, 0.0);
  p.ema_weights = p.weights;
  p.ema_biases = p.biases;
  return p;
}

std::vector<double> predict_proba(const ModelParams& p, std::span<const double> x, bool teacher) {
  return teacher ? softmax_of(p.ema_weights, p.ema_biases, p.classes, x)
                 : softmax_of(p.weights, p.biases, p.classes, x);
}

ClassIndex predict_class(const ModelParams& p, std::span<const float> x) {
  const auto xd = row_as_double(x);
  const auto z = logits(p.weights, p.biases, p.classes, xd);
  return static_cast<ClassIndex>(std::max_element(z.begin(), z.end()) - z.begin());
}

AugmentedViews augment(const UnlabelledBatch& batch, const SimConfig& cfg, Rng& rng) {
  AugmentedViews v;
  v.dim = batch.dim;
  v.first = batch.x;
  v.second = batch.x;
  const double second_sigma = cfg.unsup_mode == UnsupMode::FixMatch ? cfg.sigma_strong : cfg.sigma_weak;
  for (double& x : v.first) x += cfg.sigma_weak * rng.normal();
  for (double& x : v.second) x += second_sigma * rng.normal();
  return v;
}

LossGrad loss_and_grad(const ModelParams& p, const LabelledBatch& labelled, const AugmentedViews& views,
                       const SimConfig& cfg) {
  const std::size_t dim = p.dim;
  LossGrad out;
  out.grad_weights.assign(p.classes * dim, 0.0);
  out.grad_biases.assign(p.classes, 0.0);

  const std::size_t nl = labelled.rows();
  if (nl > 0) {
    const double scale = 1.0 / static_cast<double>(nl);
    for (std::size_t r = 0; r < nl; ++r) {
      std::span<const double> x(labelled.x.data() + r * dim, dim);
      auto prob = predict_proba(p, x);
      const ClassIndex y = labelled.y[r];
      out.loss -= scale * std::log(std::max(prob[y], std::numeric_limits<double>::min()));
      prob[y] -= 1.0;
      accumulate(out, prob, x, scale);
    }
  }

  const std::size_t nu = views.rows();
  if (cfg.unsup_mode != UnsupMode::None && nu == 0) {
    throw Error(Errc::EmptyUnlabelledBatch, "unsupervised mode needs a non-empty unlabelled batch");
  }
  if (nu == 0) return out;

  const double scale = cfg.alpha / static_cast<double>(nu);
  for (std::size_t r = 0; r < nu; ++r) {
    std::span<const double> x1(views.first.data() + r * dim, dim);
    std::span<const double> x2(views.second.data() + r * dim, dim);
    const auto p1 = predict_proba(p, x1);
    const auto top = std::max_element(p1.begin(), p1.end());
    const bool confident = *top >= cfg.tau;
    if (confident) ++out.confident;
    if (cfg.alpha == 0.0) continue;

    switch (cfg.unsup_mode) {
      case UnsupMode::FixMatch: {
        if (!confident) break;
        const auto target = static_cast<std::size_t>(top - p1.begin());
        auto p2 = predict_proba(p, x2);
        out.loss -= scale * std::log(std::max(p2[target], std::numeric_limits<double>::min()));
        p2[target] -= 1.0;
        accumulate(out, p2, x2, scale);
        break;
      }
      case UnsupMode::PiModel: {
        const auto p2 = predict_proba(p, x2);
        std::vector<double> u1(p.classes), u2(p.classes);
        double sq = 0.0;
        for (std::size_t c = 0; c < p.classes; ++c) {
          const double d = p1[c] - p2[c];
          sq += d * d;
          u1[c] = 2.0 * d;
          u2[c] = -2.0 * d;
        }
        out.loss += scale * sq;
        accumulate(out, softmax_backward(p1, u1), x1, scale);
        accumulate(out, softmax_backward(p2, u2), x2, scale);
        break;
      }
      case UnsupMode::MeanTeacher: {
        const auto q = predict_proba(p, x2, /*teacher=*/true);
        std::vector<double> u(p.classes);
        double sq = 0.0;
        for (std::size_t c = 0; c < p.classes; ++c) {
          const double d = p1[c] - q[c];
          sq += d * d;
          u[c] = 2.0 * d;
        }
        out.loss += scale * sq;
        accumulate(out, softmax_backward(p1, u), x1, scale);
        break;
      }
      case UnsupMode::None:
        break;
    }
  }
  return out;
}

LossGrad loss_and_grad(const ModelParams& p, const LabelledBatch& labelled, const UnlabelledBatch& unlabelled,
                       const SimConfig& cfg, Seed seed) {
  Rng rng(seed);
  return loss_and_grad(p, labelled, augment(unlabelled, cfg, rng), cfg);
}

double accuracy(const ModelParams& p, const Dataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    if (predict_class(p, data.x.row(i)) == data.y.at(data.x.ids()[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.x.rows());
}

TrialReport train(const Dataset& pool, const Dataset& test, const OrderedSelection& ord,
                  const SupervisionSchedule& sched, const SimConfig& cfg) {
  validate(cfg);
  if (sched.counts.size() != cfg.epochs) {
    throw Error(Errc::ScheduleMismatch, "schedule has " + std::to_string(sched.counts.size()) +
                                            " epochs but the config asks for " + std::to_string(cfg.epochs));
  }
  if (test.x.dim() != pool.x.dim()) {
    throw Error(Errc::DimensionMismatch, "test set dimension differs from the training pool");
  }
  const std::size_t n = pool.x.rows();
  const std::size_t dim = pool.x.dim();
  for (std::size_t idx : ord.order) {
    if (idx >= n) throw Error(Errc::ScheduleMismatch, "ordered index " + std::to_string(idx) + " outside the pool");
  }
  const std::size_t classes = std::max(pool.y.classes, test.y.classes);
  const std::vector<ClassIndex> pool_labels = pool.y.for_rows(pool.x);

  Rng rng(cfg.seed);
  TrialReport report;
  report.config = cfg;
  ModelParams params = ModelParams::init(classes, dim, cfg.init_scale, rng);

  const std::size_t unlabelled_batch = cfg.batch_size * cfg.unlabelled_ratio;
  const std::size_t steps = (n + unlabelled_batch - 1) / unlabelled_batch;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto prefix = active_prefix(ord, sched, epoch);
    rng.shuffle(perm);
    double loss_sum = 0.0;
    std::size_t confident = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t begin = s * unlabelled_batch;
      const std::size_t end = std::min(n, begin + unlabelled_batch);

      UnlabelledBatch ub;
      ub.dim = dim;
      ub.x.reserve((end - begin) * dim);
      for (std::size_t i = begin; i < end; ++i) {
        auto r = pool.x.row(perm[i]);
        ub.x.insert(ub.x.end(), r.begin(), r.end());
      }

      LabelledBatch lb;
      lb.dim = dim;
      if (!prefix.empty()) {
        std::vector<std::size_t> picks;
        if (prefix.size() >= cfg.batch_size) {
          picks = rng.sample_without_replacement(prefix.size(), cfg.batch_size);
        } else {
          picks.resize(cfg.batch_size);
          for (auto& pick : picks) pick = rng.index(prefix.size());
        }
        for (std::size_t pick : picks) {
          const std::size_t row = prefix[pick];
          auto r = pool.x.row(row);
          lb.x.insert(lb.x.end(), r.begin(), r.end());
          lb.y.push_back(pool_labels[row]);
        }
      }

      const LossGrad lg = loss_and_grad(params, lb, ub, cfg, rng.next());
      loss_sum += lg.loss;
      confident += lg.confident;
      for (std::size_t i = 0; i < params.weights.size(); ++i) params.weights[i] -= cfg.learning_rate * lg.grad_weights[i];
      for (std::size_t c = 0; c < classes; ++c) params.biases[c] -= cfg.learning_rate * lg.grad_biases[c];
      if (cfg.unsup_mode == UnsupMode::MeanTeacher) {
        const double mo = cfg.ema_momentum;
        for (std::size_t i = 0; i < params.weights.size(); ++i) {
          params.ema_weights[i] = mo * params.ema_weights[i] + (1.0 - mo) * params.weights[i];
        }
        for (std::size_t c = 0; c < classes; ++c) {
          params.ema_biases[c] = mo * params.ema_biases[c] + (1.0 - mo) * params.biases[c];
        }
      }
    }
    report.train_loss_curve.push_back(steps == 0 ? 0.0 : loss_sum / static_cast<double>(steps));
    report.pseudo_label_rate_curve.push_back(static_cast<double>(confident) / static_cast<double>(n));
    report.active_count_curve.push_back(prefix.size());
  }

  report.test_accuracy = accuracy(params, test);
  report.train_accuracy = accuracy(params, pool);
  report.model = std::move(params);
  return report;
}

std::string_view to_string(UnsupMode m) noexcept {
  switch (m) {
    case UnsupMode::FixMatch: return "fixmatch";
    case UnsupMode::PiModel: return "pimodel";
    case UnsupMode::MeanTeacher: return "meanteacher";
    case UnsupMode::None: return "none";
  }
  return "?";
}

UnsupMode parse_unsup_mode(std::string_view text) {
  for (auto m : {UnsupMode::FixMatch, UnsupMode::PiModel, UnsupMode::MeanTeacher, UnsupMode::None}) {
    if (text == to_string(m)) return m;
  }
  throw Error(Errc::InvalidParams, "unknown unsup_mode '" + std::string(text) + "'");
}

}  // namespace labelsel
