#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lfm/datamodel.hpp"
#include "lfm/mixup.hpp"
#include "lfm/textguide.hpp"

namespace lfm {

enum class LossKind { ce, balanced_ce };

/// Which mixing scheme feeds the trainer.
enum class MixArm {
  none,   ///< plain rows with one-hot labels
  mixup,  ///< uniform pairs, lambda_y = lambda_x
  remix,  ///< uniform pairs, Remix relabelling
  lfm,    ///< text-guided pairs with label shift
};

struct StageConfig {
  std::size_t epochs = 0;
  double lr0 = 0.1;
  double lr_min = 1e-4;
  double alpha = 1.0;
  double tau = 0.05;
};

struct TrainConfig {
  /// Stage 1 trains the encoder projection with the adapter frozen at identity.
  StageConfig stage1{0, 0.05, 5e-5, 1.0, 0.05};
  /// Stage 2 trains the adapter with the encoder projection frozen.
  StageConfig stage2{10, 0.5, 5e-4, 1.0, 0.05};
  std::size_t batch_size = 32;
  LossKind loss = LossKind::ce;
  MixArm arm = MixArm::lfm;
  double logit_scale = 30.0;
  double beta_a = 0.5;
  double beta_b = 0.5;
  double remix_kappa = 3.0;
  double remix_tau = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  ShiftParams shift_params(const StageConfig& stage) const;
};

struct EpochRecord {
  int stage = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// Fraction in [0, 1]; NaN when no validation set was given.
  double val_accuracy = 0.0;
};

/// Cosine classifier head: f = normalize(W * (encoder_proj * x)).
struct TrainedHead {
  std::size_t dim = 0;
  double logit_scale = 30.0;
  RowMatrix W;
  RowMatrix encoder_proj;
  std::vector<EpochRecord> history;
  TrainConfig config;

  /// W = encoder_proj = I.
  static TrainedHead zero_shot(std::size_t dim, double logit_scale = 30.0);
};

struct Schedule {
  double lr0 = 0.1;
  double lr_min = 0.0;
  std::size_t total_steps = 1;
};

/// lr_min + (lr0 - lr_min) (1 + cos(pi step / total_steps)) / 2.
double cosine_anneal(const Schedule& schedule, std::size_t step);

Vector forward(const TrainedHead& head, const Eigen::Ref<const Vector>& base_feature);

/// scale * (text_features * f).
Vector cosine_logits(const Eigen::Ref<const Vector>& feature, const RowMatrix& text_features,
                     double scale);

/// Argmax of the cosine logits; ties go to the lowest class index.
std::size_t predict(const TrainedHead& head, const Eigen::Ref<const Vector>& base_feature,
                    const ClassCatalog& catalog);

/// Fraction of rows of `data` predicted correctly.
double accuracy(const TrainedHead& head, const EmbeddingSet& data, const ClassCatalog& catalog);

struct LossValue {
  double loss = 0.0;
  Vector grad;  ///< d loss / d logits
};

/// -sum_k y_k log softmax(logits)_k, gradient softmax(logits) - y.
LossValue soft_ce_loss(const Eigen::Ref<const Vector>& logits,
                       const Eigen::Ref<const Vector>& soft_label);

/// logits[k] + ln(n_k / sum n). Applied during training only.
Vector balanced_ce_adjust(const Eigen::Ref<const Vector>& logits,
                          const std::vector<std::size_t>& counts);

struct HeadGradients {
  double loss = 0.0;
  RowMatrix W;
  RowMatrix encoder_proj;
};

/// Mean loss over a batch and its gradients with respect to both matrices.
/// `inputs` is B x d (base features, possibly blended), `targets` is B x C.
HeadGradients loss_and_gradients(const TrainedHead& head, const RowMatrix& inputs,
                                 const RowMatrix& targets, const ClassCatalog& catalog,
                                 LossKind loss);

/// Called for every mixed example the trainer builds (not for arm none).
using MixObserver = std::function<void(int stage, const SampledPair& pair, const MixedExample& mixed)>;

/// Two-stage decoupled training. `val` may be empty, in which case the
/// per-epoch validation accuracy is recorded as NaN.
TrainedHead train(const EmbeddingSet& data, const EmbeddingSet& val, const ClassCatalog& catalog,
                  const TrainConfig& config, const MixObserver& observer = {});

std::string to_string(LossKind loss);
std::string to_string(MixArm arm);
LossKind parse_loss(const std::string& name);
MixArm parse_arm(const std::string& name);

}  // namespace lfm
