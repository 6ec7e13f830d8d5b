#include "lfm/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lfm/errors.hpp"

namespace lfm::config {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

bool is_non_negative_integer(const json& value) {
  return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
}

namespace {

template <typename T>
T field(const json& obj, const char* key, T fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!is_non_negative_integer(*it)) throw ConfigError(where + "." + key + " must be a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(where + "." + key + " must be a number");
    }
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for " + where + "." + key);
  }
}

json matrix_to_json(const RowMatrix& m) {
  json flat = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

RowMatrix matrix_from_json(const json& flat, std::size_t dim, const char* name) {
  if (!flat.is_array() || flat.size() != dim * dim) {
    throw DataError(std::string("head field ") + name + " must hold dim*dim numbers");
  }
  RowMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * dim + j].get<double>();
  if (!m.allFinite()) throw DataError(std::string("head field ") + name + " is not finite");
  return m;
}

StageConfig stage_from_json(const json& obj, StageConfig stage, const std::string& where) {
  check_keys(obj, {"epochs", "lr0", "lr_min", "alpha", "tau"}, where);
  stage.epochs = field(obj, "epochs", stage.epochs, where);
  stage.lr0 = field(obj, "lr0", stage.lr0, where);
  stage.lr_min = field(obj, "lr_min", stage.lr_min, where);
  stage.alpha = field(obj, "alpha", stage.alpha, where);
  stage.tau = field(obj, "tau", stage.tau, where);
  return stage;
}

json stage_to_json(const StageConfig& stage) {
  return {{"epochs", stage.epochs},
          {"lr0", stage.lr0},
          {"lr_min", stage.lr_min},
          {"alpha", stage.alpha},
          {"tau", stage.tau}};
}

}  // namespace

SyntheticSpec synthetic_from_json(const json& obj) {
  const std::string where = "synthetic";
  check_keys(obj, {"num_classes", "dim", "pair_groups", "intra_noise", "pair_similarity",
                   "modality_gap", "train_per_class", "val_per_class"},
             where);
  SyntheticSpec spec;
  spec.num_classes = field(obj, "num_classes", spec.num_classes, where);
  spec.dim = field(obj, "dim", spec.dim, where);
  spec.intra_noise = field(obj, "intra_noise", spec.intra_noise, where);
  spec.pair_similarity = field(obj, "pair_similarity", spec.pair_similarity, where);
  spec.modality_gap = field(obj, "modality_gap", spec.modality_gap, where);
  spec.train_per_class = field(obj, "train_per_class", spec.train_per_class, where);
  spec.val_per_class = field(obj, "val_per_class", spec.val_per_class, where);
  if (auto it = obj.find("pair_groups"); it != obj.end()) {
    if (!it->is_array()) throw ConfigError("synthetic.pair_groups must be a list of [a, b] pairs");
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2 || !is_non_negative_integer(p[0]) || !is_non_negative_integer(p[1])) {
        throw ConfigError("synthetic.pair_groups entries must be [a, b] with non-negative integers");
      }
      spec.pair_groups.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
    }
  }
  return spec;
}

json to_json(const SyntheticSpec& spec) {
  json pairs = json::array();
  for (auto [a, b] : spec.pair_groups) pairs.push_back({a, b});
  return {{"num_classes", spec.num_classes},   {"dim", spec.dim},
          {"pair_groups", std::move(pairs)},   {"intra_noise", spec.intra_noise},
          {"pair_similarity", spec.pair_similarity}, {"modality_gap", spec.modality_gap},
          {"train_per_class", spec.train_per_class}, {"val_per_class", spec.val_per_class}};
}

LongTailSpec longtail_from_json(const json& obj, std::size_t num_classes, std::size_t default_n_max) {
  check_keys(obj, {"n_max", "gamma"}, "longtail");
  LongTailSpec spec;
  spec.num_classes = num_classes;
  spec.n_max = field(obj, "n_max", default_n_max, "longtail");
  spec.gamma = field(obj, "gamma", 100.0, "longtail");
  return spec;
}

json to_json(const LongTailSpec& spec) { return {{"n_max", spec.n_max}, {"gamma", spec.gamma}}; }

TrainConfig train_from_json(const json& obj) {
  const std::string where = "train";
  check_keys(obj, {"stage1", "stage2", "batch_size", "loss", "arm", "logit_scale", "beta_a",
                   "beta_b", "remix_kappa", "remix_tau"},
             where);
  TrainConfig config;
  if (auto it = obj.find("stage1"); it != obj.end()) config.stage1 = stage_from_json(*it, config.stage1, "train.stage1");
  if (auto it = obj.find("stage2"); it != obj.end()) config.stage2 = stage_from_json(*it, config.stage2, "train.stage2");
  config.batch_size = field(obj, "batch_size", config.batch_size, where);
  config.loss = parse_loss(field(obj, "loss", to_string(config.loss), where));
  config.arm = parse_arm(field(obj, "arm", to_string(config.arm), where));
  config.logit_scale = field(obj, "logit_scale", config.logit_scale, where);
  config.beta_a = field(obj, "beta_a", config.beta_a, where);
  config.beta_b = field(obj, "beta_b", config.beta_b, where);
  config.remix_kappa = field(obj, "remix_kappa", config.remix_kappa, where);
  config.remix_tau = field(obj, "remix_tau", config.remix_tau, where);
  config.validate();
  return config;
}

json to_json(const TrainConfig& config) {
  return {{"stage1", stage_to_json(config.stage1)},
          {"stage2", stage_to_json(config.stage2)},
          {"batch_size", config.batch_size},
          {"loss", to_string(config.loss)},
          {"arm", to_string(config.arm)},
          {"logit_scale", config.logit_scale},
          {"beta_a", config.beta_a},
          {"beta_b", config.beta_b},
          {"remix_kappa", config.remix_kappa},
          {"remix_tau", config.remix_tau},
          {"seed", config.seed}};
}

json head_to_json(const TrainedHead& head) {
  json history = json::array();
  for (const auto& rec : head.history) {
    json acc = std::isnan(rec.val_accuracy) ? json(nullptr) : json(rec.val_accuracy);
    history.push_back(
        {{"stage", rec.stage}, {"epoch", rec.epoch}, {"train_loss", rec.train_loss}, {"val_accuracy", acc}});
  }
  return {{"dim", head.dim},
          {"logit_scale", head.logit_scale},
          {"W", matrix_to_json(head.W)},
          {"encoder_proj", matrix_to_json(head.encoder_proj)},
          {"config", to_json(head.config)},
          {"history", std::move(history)}};
}

TrainedHead head_from_json(const json& doc) {
  TrainedHead head;
  try {
    head.dim = doc.at("dim").get<std::size_t>();
    head.logit_scale = doc.at("logit_scale").get<double>();
    head.W = matrix_from_json(doc.at("W"), head.dim, "W");
    head.encoder_proj = matrix_from_json(doc.at("encoder_proj"), head.dim, "encoder_proj");
    if (auto it = doc.find("config"); it != doc.end()) {
      json cfg = *it;
      head.config.seed = cfg.value("seed", std::uint64_t{0});
      cfg.erase("seed");
      head.config = [&] {
        auto parsed = train_from_json(cfg);
        parsed.seed = head.config.seed;
        return parsed;
      }();
    }
    if (auto it = doc.find("history"); it != doc.end()) {
      for (const auto& rec : *it) {
        const auto& acc = rec.at("val_accuracy");
        head.history.push_back({rec.at("stage").get<int>(), rec.at("epoch").get<std::size_t>(),
                                rec.at("train_loss").get<double>(),
                                acc.is_null() ? std::numeric_limits<double>::quiet_NaN() : acc.get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed head file: ") + e.what());
  }
  if (head.dim == 0 || !(head.logit_scale > 0.0)) throw DataError("head has invalid dim or logit_scale");
  return head;
}

}  // namespace lfm::config
