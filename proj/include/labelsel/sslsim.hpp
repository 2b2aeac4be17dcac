#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "labelsel/curriculum.hpp"
#include "labelsel/ingest.hpp"
#include "labelsel/policy.hpp"
#include "labelsel/rng.hpp"

namespace labelsel {

/// Isotropic gaussian classes. Class means sit at pairwise distance
/// `separation` (exactly when dim >= classes, at least that on a lattice
/// otherwise).
struct BlobSpec {
  std::size_t classes = 2;
  std::size_t dim = 2;
  std::size_t per_class = 10;
  double spread = 1.0;
  double separation = 10.0;
  Seed seed = 0;

  friend bool operator==(const BlobSpec&, const BlobSpec&) = default;
};

void validate(const BlobSpec& spec);

struct Dataset {
  EmbeddingMatrix x;
  LabelAssignment y;
};

/// Class means of `spec`, row-major classes x dim.
std::vector<double> blob_means(const BlobSpec& spec);

/// Training pool: `per_class` rows per class, class-major, ids 0..N-1.
Dataset gen_blobs(const BlobSpec& spec);

/// Held-out rows around the same means, from an independent random stream.
Dataset gen_blobs_test(const BlobSpec& spec, std::size_t per_class);

/// Soft cluster memberships standing in for a pre-trained model's output:
/// k-means++ into k clusters, then softmax(-distance / temperature) per row.
PredictionMatrix proxy_predictions(const EmbeddingMatrix& m, std::size_t k, double temperature, Seed seed);

enum class UnsupMode { FixMatch, PiModel, MeanTeacher, None };

struct SimConfig {
  std::size_t epochs = 60;
  double learning_rate = 0.1;
  double alpha = 1.0;  // unsupervised loss weight
  double tau = 0.95;   // pseudo-label confidence threshold
  double sigma_weak = 0.1;
  double sigma_strong = 0.5;
  UnsupMode unsup_mode = UnsupMode::FixMatch;
  double ema_momentum = 0.999;
  std::size_t batch_size = 64;
  std::size_t unlabelled_ratio = 1;  // unlabelled batch = ratio * batch_size
  double init_scale = 0.01;
  Seed seed = 0;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

void validate(const SimConfig& cfg);

/// Multinomial logistic classifier, weights row-major classes x dim. The
/// ema_* copy is the mean-teacher target.
struct ModelParams {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;
  std::vector<double> biases;
  std::vector<double> ema_weights;
  std::vector<double> ema_biases;

  static ModelParams init(std::size_t classes, std::size_t dim, double scale, Rng& rng);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Softmax output for one row. `teacher` selects the EMA copy.
std::vector<double> predict_proba(const ModelParams& p, std::span<const double> x, bool teacher = false);
ClassIndex predict_class(const ModelParams& p, std::span<const float> x);

struct LabelledBatch {
  std::size_t dim = 0;
  std::vector<double> x;  // rows x dim
  std::vector<ClassIndex> y;
  std::size_t rows() const noexcept { return y.size(); }
};

struct UnlabelledBatch {
  std::size_t dim = 0;
  std::vector<double> x;
  std::size_t rows() const noexcept { return dim == 0 ? 0 : x.size() / dim; }
};

/// Two augmented copies of an unlabelled batch. FixMatch uses a weak and a
/// strong view; the consistency modes use two weak views.
struct AugmentedViews {
  std::size_t dim = 0;
  std::vector<double> first;
  std::vector<double> second;
  std::size_t rows() const noexcept { return dim == 0 ? 0 : first.size() / dim; }
};

AugmentedViews augment(const UnlabelledBatch& batch, const SimConfig& cfg, Rng& rng);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_biases;
  std::size_t confident = 0;  // unlabelled rows whose first-view max prob >= tau
};

/// Loss = mean cross-entropy over the labelled batch + alpha * mean
/// unsupervised term, with its exact gradient. Pseudo-labels, the confidence
/// mask and the teacher output are constants.
LossGrad loss_and_grad(const ModelParams& p, const LabelledBatch& labelled, const AugmentedViews& views,
                       const SimConfig& cfg);

/// Same, drawing the augmentation noise from `seed`.
LossGrad loss_and_grad(const ModelParams& p, const LabelledBatch& labelled, const UnlabelledBatch& unlabelled,
                       const SimConfig& cfg, Seed seed);

struct TrialReport {
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::vector<double> train_loss_curve;
  std::vector<double> pseudo_label_rate_curve;
  std::vector<std::size_t> active_count_curve;
  SimConfig config;
  ModelParams model;

  friend bool operator==(const TrialReport&, const TrialReport&) = default;
};

double accuracy(const ModelParams& p, const Dataset& data);

TrialReport train(const Dataset& pool, const Dataset& test, const OrderedSelection& ord,
                  const SupervisionSchedule& sched, const SimConfig& cfg);

std::string_view to_string(UnsupMode m) noexcept;
UnsupMode parse_unsup_mode(std::string_view text);

}  // namespace labelsel
