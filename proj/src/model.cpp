#include "lfm/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "lfm/errors.hpp"
#include "lfm/textguide.hpp"

namespace lfm {

namespace {

void validate_stage(const StageConfig& stage, const char* name) {
  auto fail = [&](const std::string& what) { throw ConfigError(std::string(name) + ": " + what); };
  if (!(stage.lr0 >= 0.0) || !std::isfinite(stage.lr0)) fail("lr0 must be >= 0");
  if (!(stage.lr_min >= 0.0) || stage.lr_min > stage.lr0) fail("lr_min must lie in [0, lr0]");
  if (!(stage.alpha >= 0.0)) fail("alpha must be >= 0");
  if (!(stage.tau > 0.0) || !std::isfinite(stage.tau)) fail("tau must be > 0");
}

}  // namespace

void TrainConfig::validate() const {
  validate_stage(stage1, "stage1");
  validate_stage(stage2, "stage2");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) {
    throw ConfigError("logit_scale must be > 0");
  }
  shift_params(stage1).validate();
}

ShiftParams TrainConfig::shift_params(const StageConfig& stage) const {
  ShiftParams shift;
  shift.alpha = stage.alpha;
  shift.beta_a = beta_a;
  shift.beta_b = beta_b;
  shift.remix_kappa = remix_kappa;
  shift.remix_tau = remix_tau;
  switch (arm) {
    case MixArm::none:
    case MixArm::mixup:
      shift.rule = LabelRule::plain;
      break;
    case MixArm::remix:
      shift.rule = LabelRule::remix;
      break;
    case MixArm::lfm:
      shift.rule = LabelRule::label_shift;
      break;
  }
  return shift;
}

TrainedHead TrainedHead::zero_shot(std::size_t dim, double logit_scale) {
  TrainedHead head;
  head.dim = dim;
  head.logit_scale = logit_scale;
  head.W = RowMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  head.encoder_proj = head.W;
  head.config.logit_scale = logit_scale;
  head.config.stage1.epochs = 0;
  head.config.stage2.epochs = 0;
  return head;
}

double cosine_anneal(const Schedule& schedule, std::size_t step) {
  if (step > schedule.total_steps) throw ConfigError("schedule step out of range");
  if (schedule.total_steps == 0) return schedule.lr0;
  const double t = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return schedule.lr_min +
         0.5 * (schedule.lr0 - schedule.lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

Vector forward(const TrainedHead& head, const Eigen::Ref<const Vector>& base_feature) {
  if (static_cast<std::size_t>(base_feature.size()) != head.dim) {
    throw DataError("feature dimension does not match the head");
  }
  if (!base_feature.allFinite()) throw DataError("non-finite input feature");
  Vector z = head.W * (head.encoder_proj * base_feature);
  return normalized(z);
}

Vector cosine_logits(const Eigen::Ref<const Vector>& feature, const RowMatrix& text_features,
                     double scale) {
  return scale * (text_features * feature);
}

std::size_t predict(const TrainedHead& head, const Eigen::Ref<const Vector>& base_feature,
                    const ClassCatalog& catalog) {
  Vector logits = cosine_logits(forward(head, base_feature), catalog.text_features, head.logit_scale);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits(k) > logits(best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

double accuracy(const TrainedHead& head, const EmbeddingSet& data, const ClassCatalog& catalog) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vector x = data.features.row(static_cast<Eigen::Index>(i)).transpose();
    if (predict(head, x, catalog) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

LossValue soft_ce_loss(const Eigen::Ref<const Vector>& logits,
                       const Eigen::Ref<const Vector>& soft_label) {
  const double top = logits.maxCoeff();
  Vector shifted = logits.array() - top;
  const double log_z = std::log(shifted.array().exp().sum());
  Vector log_softmax = shifted.array() - log_z;
  LossValue out;
  out.loss = -soft_label.dot(log_softmax);
  out.grad = log_softmax.array().exp().matrix() - soft_label;
  return out;
}

Vector balanced_ce_adjust(const Eigen::Ref<const Vector>& logits,
                          const std::vector<std::size_t>& counts) {
  if (counts.size() != static_cast<std::size_t>(logits.size())) {
    throw DataError("counts length differs from logits length");
  }
  const double total =
      static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  Vector out = logits;
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    out(k) += std::log(static_cast<double>(counts[static_cast<std::size_t>(k)]) / total);
  }
  return out;
}

HeadGradients loss_and_gradients(const TrainedHead& head, const RowMatrix& inputs,
                                 const RowMatrix& targets, const ClassCatalog& catalog,
                                 LossKind loss) {
  const auto batch = inputs.rows();
  const double s = head.logit_scale;
  const RowMatrix& text = catalog.text_features;

  RowMatrix projected = inputs * head.encoder_proj.transpose();  // u = P x
  RowMatrix z = projected * head.W.transpose();                  // z = W u
  Vector norms = z.rowwise().norm();
  if (!norms.allFinite() || norms.minCoeff() == 0.0) {
    throw DivergenceError("adapter output is zero or non-finite; normalization undefined");
  }
  RowMatrix f = norms.cwiseInverse().asDiagonal() * z;
  RowMatrix logits = s * f * text.transpose();

  Vector prior;
  if (loss == LossKind::balanced_ce) {
    prior = balanced_ce_adjust(Vector::Zero(text.rows()), catalog.counts);
  }

  HeadGradients out;
  RowMatrix g_logits(batch, text.rows());
  for (Eigen::Index b = 0; b < batch; ++b) {
    Vector row = logits.row(b).transpose();
    if (loss == LossKind::balanced_ce) row += prior;
    LossValue lv = soft_ce_loss(row, targets.row(b).transpose());
    out.loss += lv.loss;
    g_logits.row(b) = lv.grad.transpose();
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  out.loss *= inv_batch;
  g_logits *= inv_batch;

  // Back through the cosine head, then through f = z / |z|:
  // dL/dz = (I - f f^T) dL/df / |z|.
  RowMatrix g_f = s * g_logits * text;
  Vector radial = (f.array() * g_f.array()).rowwise().sum();
  RowMatrix g_z = norms.cwiseInverse().asDiagonal() * (g_f - radial.asDiagonal() * f);

  out.W = g_z.transpose() * projected;
  RowMatrix g_u = g_z * head.W;
  out.encoder_proj = g_u.transpose() * inputs;
  return out;
}

namespace {

struct StageRun {
  int index;
  const StageConfig& stage;
  bool update_proj;
};

void check_finite(const TrainedHead& head, double loss, const StageRun& run, std::size_t epoch,
                  std::size_t step, double lr) {
  if (std::isfinite(loss) && head.W.allFinite() && head.encoder_proj.allFinite()) return;
  std::ostringstream msg;
  msg << "training diverged in stage " << run.index << ", epoch " << epoch + 1 << ", step "
      << step << " (lr " << lr << ", batch loss " << loss << ")";
  throw DivergenceError(msg.str());
}

void run_stage(TrainedHead& head, const StageRun& run, const EmbeddingSet& data,
               const EmbeddingSet& val, const ClassCatalog& catalog, const TrainConfig& config,
               const MixObserver& observer) {
  if (run.stage.epochs == 0) return;
  const auto c = static_cast<Eigen::Index>(catalog.num_classes());
  const auto d = static_cast<Eigen::Index>(data.dim);
  const std::size_t batch = config.batch_size;
  const std::size_t steps_per_epoch = (data.size() + batch - 1) / batch;
  const Schedule schedule{run.stage.lr0, run.stage.lr_min, run.stage.epochs * steps_per_epoch};

  const bool local = config.arm == MixArm::lfm;
  LocalSamplingModel model = build_sampling_model(catalog, run.stage.tau);
  const auto stage_id = static_cast<std::uint64_t>(run.index);
  PairStream pairs(model, data, derive_seed(config.seed, 100 + stage_id),
                   local ? PairMode::local : PairMode::uniform);
  Rng mix_rng(derive_seed(config.seed, 200 + stage_id));
  const ShiftParams shift = config.shift_params(run.stage);

  RowMatrix inputs(static_cast<Eigen::Index>(batch), d);
  RowMatrix targets(static_cast<Eigen::Index>(batch), c);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < run.stage.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      const std::size_t rows = std::min(batch, data.size() - s * batch);
      inputs.resize(static_cast<Eigen::Index>(rows), d);
      targets.setZero(static_cast<Eigen::Index>(rows), c);
      for (std::size_t b = 0; b < rows; ++b) {
        const auto r = static_cast<Eigen::Index>(b);
        SampledPair pair = pairs.next();
        const auto xi = data.features.row(static_cast<Eigen::Index>(pair.first.row)).transpose();
        if (config.arm == MixArm::none) {
          inputs.row(r) = xi.transpose();
          targets(r, pair.first.label) = 1.0;
          continue;
        }
        const auto xj = data.features.row(static_cast<Eigen::Index>(pair.second.row)).transpose();
        MixedExample mixed =
            mix(xi, pair.first.label, xj, pair.second.label, shift, catalog.counts, mix_rng);
        if (observer) observer(run.index, pair, mixed);
        inputs.row(r) = mixed.feature.transpose();
        targets.row(r) = mixed.soft_label.transpose();
      }

      const double lr = cosine_anneal(schedule, step);
      HeadGradients grads = loss_and_gradients(head, inputs, targets, catalog, config.loss);
      if (run.update_proj) {
        head.encoder_proj -= lr * grads.encoder_proj;
      } else {
        head.W -= lr * grads.W;
      }
      check_finite(head, grads.loss, run, epoch, step, lr);
      loss_sum += grads.loss * static_cast<double>(rows);
      seen += rows;
    }
    head.history.push_back({run.index, epoch + 1, loss_sum / static_cast<double>(seen),
                            accuracy(head, val, catalog)});
  }
}

}  // namespace

TrainedHead train(const EmbeddingSet& data, const EmbeddingSet& val, const ClassCatalog& catalog,
                  const TrainConfig& config, const MixObserver& observer) {
  config.validate();
  catalog.validate();
  if (data.dim != catalog.dim()) throw DataError("training features and text features differ in dimension");
  if (val.size() > 0 && val.dim != data.dim) throw DataError("validation dimension differs from training");
  if (data.size() == 0) throw DataError("training set is empty");
  auto present = data.class_counts(catalog.num_classes());
  for (std::size_t k = 0; k < present.size(); ++k) {
    if (present[k] == 0) throw DataError("class '" + catalog.names[k] + "' has no training rows");
  }

  TrainedHead head = TrainedHead::zero_shot(data.dim, config.logit_scale);
  head.config = config;
  run_stage(head, {1, config.stage1, true}, data, val, catalog, config, observer);
  // The adapter starts the second stage at identity.
  head.W.setIdentity();
  run_stage(head, {2, config.stage2, false}, data, val, catalog, config, observer);
  return head;
}

std::string to_string(LossKind loss) { return loss == LossKind::ce ? "ce" : "balanced_ce"; }

std::string to_string(MixArm arm) {
  switch (arm) {
    case MixArm::none: return "none";
    case MixArm::mixup: return "mixup";
    case MixArm::remix: return "remix";
    case MixArm::lfm: return "lfm";
  }
  return "none";
}

LossKind parse_loss(const std::string& name) {
  if (name == "ce") return LossKind::ce;
  if (name == "balanced_ce" || name == "balce") return LossKind::balanced_ce;
  throw ConfigError("unknown loss '" + name + "' (expected ce or balanced_ce)");
}

MixArm parse_arm(const std::string& name) {
  if (name == "none") return MixArm::none;
  if (name == "mixup") return MixArm::mixup;
  if (name == "remix") return MixArm::remix;
  if (name == "lfm") return MixArm::lfm;
  throw ConfigError("unknown arm '" + name + "' (expected none, mixup, remix or lfm)");
}

}  // namespace lfm
