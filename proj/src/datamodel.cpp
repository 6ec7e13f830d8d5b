#include "lfm/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "lfm/errors.hpp"
#include "lfm/rng.hpp"

namespace lfm {

std::vector<std::size_t> EmbeddingSet::class_counts(std::size_t num_classes) const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto label : labels) {
    if (label < num_classes) ++counts[label];
  }
  return counts;
}

void EmbeddingSet::validate(std::size_t num_classes) const {
  if (dim == 0) throw DataError("embedding set has dimension 0");
  if (static_cast<std::size_t>(features.rows()) != labels.size() ||
      static_cast<std::size_t>(features.cols()) != dim) {
    throw DataError("embedding set shape does not match its labels/dim");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      std::ostringstream msg;
      msg << "row " << i << " has label " << labels[i] << " but only " << num_classes
          << " classes exist";
      throw DataError(msg.str());
    }
    double norm = features.row(static_cast<Eigen::Index>(i)).norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
      std::ostringstream msg;
      msg << "row " << i << " is not unit-norm (norm " << norm << ")";
      throw DataError(msg.str());
    }
  }
}

std::vector<std::size_t> ClassCatalog::sorted_by_count() const {
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  return order;
}

std::string ClassCatalog::prompt(std::size_t k) const {
  std::string out = prompt_template;
  auto pos = out.find("{CLASS}");
  if (pos != std::string::npos) out.replace(pos, 7, names.at(k));
  return out;
}

void ClassCatalog::validate() const {
  const auto c = names.size();
  if (c < 2) throw DataError("catalog needs at least 2 classes");
  if (counts.size() != c) throw DataError("catalog counts length differs from names length");
  if (static_cast<std::size_t>(text_features.rows()) != c) {
    throw DataError("catalog text_features row count differs from names length");
  }
  if (text_features.cols() == 0) throw DataError("catalog text_features have dimension 0");
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] < 1) throw DataError("class '" + names[k] + "' has count 0");
    double norm = text_features.row(static_cast<Eigen::Index>(k)).norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw DataError("text feature of class '" + names[k] + "' is not unit-norm");
    }
  }
}

Vector normalized(const Eigen::Ref<const Vector>& x) {
  if (!x.allFinite()) throw DataError("cannot normalize a non-finite vector");
  double norm = x.norm();
  if (norm == 0.0) throw DataError("cannot normalize a zero vector");
  return x / norm;
}

std::vector<std::size_t> build_longtail_counts(const LongTailSpec& spec) {
  if (spec.num_classes < 2) throw ConfigError("long-tail profile needs at least 2 classes");
  if (!(spec.gamma >= 1.0) || !std::isfinite(spec.gamma)) {
    throw ConfigError("imbalance factor must be >= 1");
  }
  if (static_cast<double>(spec.n_max) < spec.gamma) {
    throw ConfigError("n_max must be at least the imbalance factor so every class keeps a sample");
  }
  std::vector<std::size_t> counts(spec.num_classes);
  const double last = static_cast<double>(spec.num_classes - 1);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    double exact = static_cast<double>(spec.n_max) *
                   std::pow(spec.gamma, -static_cast<double>(k) / last);
    counts[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
  }
  counts[0] = spec.n_max;
  return counts;
}

std::pair<EmbeddingSet, ClassCatalog> subset_longtail(const EmbeddingSet& data,
                                                      const ClassCatalog& catalog,
                                                      const std::vector<std::size_t>& counts,
                                                      std::uint64_t seed) {
  const auto c = catalog.num_classes();
  if (counts.size() != c) throw ConfigError("counts length differs from number of classes");

  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] >= c) throw DataError("label out of range in subset input");
    by_class[data.labels[i]].push_back(i);
  }

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < c; ++k) {
    auto& pool = by_class[k];
    if (pool.size() < counts[k]) {
      std::ostringstream msg;
      msg << "class '" << catalog.names[k] << "' has " << pool.size() << " rows but "
          << counts[k] << " were requested";
      throw DataError(msg.str());
    }
    std::shuffle(pool.begin(), pool.end(), rng.engine());
    keep.insert(keep.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(counts[k]));
  }
  std::sort(keep.begin(), keep.end());

  EmbeddingSet out;
  out.dim = data.dim;
  out.split = data.split;
  out.labels.reserve(keep.size());
  out.features.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(data.dim));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.labels.push_back(data.labels[keep[r]]);
    out.features.row(static_cast<Eigen::Index>(r)) =
        data.features.row(static_cast<Eigen::Index>(keep[r]));
  }

  ClassCatalog updated = catalog;
  updated.counts = counts;
  return {std::move(out), std::move(updated)};
}

namespace {

void check_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.dim < 3) throw ConfigError("synthetic dimension must be at least 3");
  if (spec.num_classes < 4) throw ConfigError("synthetic benchmark needs at least 4 classes");
  if (!(spec.intra_noise >= 0.0)) throw ConfigError("intra_noise must be >= 0");
  if (!(spec.modality_gap >= 0.0)) throw ConfigError("modality_gap must be >= 0");
  if (!(spec.pair_similarity > 0.0 && spec.pair_similarity < 1.0)) {
    throw ConfigError("pair_similarity must lie in (0, 1)");
  }
  if (spec.train_per_class < 1 || spec.val_per_class < 1) {
    throw ConfigError("train_per_class and val_per_class must be positive");
  }
  std::set<std::size_t> seen;
  for (auto [a, b] : spec.pair_groups) {
    if (a >= spec.num_classes || b >= spec.num_classes) {
      throw ConfigError("pair group index out of range");
    }
    if (!seen.insert(a).second || !seen.insert(b).second) {
      throw ConfigError("pair group indices must be distinct");
    }
  }
}

RowMatrix make_prototypes(const SyntheticSpec& spec, Rng& rng) {
  const auto c = spec.num_classes;
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const double cos_pair = spec.pair_similarity;
  const double sin_pair = std::sqrt(1.0 - cos_pair * cos_pair);

  std::vector<bool> is_second(c, false);
  for (auto [a, b] : spec.pair_groups) is_second[b] = true;
  const std::size_t needed = c + spec.pair_groups.size();

  RowMatrix protos(static_cast<Eigen::Index>(c), d);
  if (needed <= spec.dim) {
    // Orthonormal directions: one per first member or unpaired class, one extra per pair.
    Eigen::MatrixXd gauss(d, static_cast<Eigen::Index>(needed));
    for (Eigen::Index j = 0; j < gauss.cols(); ++j)
      for (Eigen::Index i = 0; i < d; ++i) gauss(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, gauss.cols());
    Eigen::Index next = 0;
    for (std::size_t k = 0; k < c; ++k) {
      if (!is_second[k]) protos.row(static_cast<Eigen::Index>(k)) = q.col(next++).transpose();
    }
    for (auto [a, b] : spec.pair_groups) {
      protos.row(static_cast<Eigen::Index>(b)) =
          cos_pair * protos.row(static_cast<Eigen::Index>(a)) + sin_pair * q.col(next++).transpose();
    }
  } else {
    for (std::size_t k = 0; k < c; ++k) {
      if (is_second[k]) continue;
      Vector g(d);
      for (Eigen::Index i = 0; i < d; ++i) g(i) = rng.normal();
      protos.row(static_cast<Eigen::Index>(k)) = normalized(g).transpose();
    }
    for (auto [a, b] : spec.pair_groups) {
      Vector anchor = protos.row(static_cast<Eigen::Index>(a)).transpose();
      Vector g(d);
      for (Eigen::Index i = 0; i < d; ++i) g(i) = rng.normal();
      g -= g.dot(anchor) * anchor;
      protos.row(static_cast<Eigen::Index>(b)) =
          (cos_pair * anchor + sin_pair * normalized(g)).transpose();
    }
  }
  for (Eigen::Index k = 0; k < protos.rows(); ++k) protos.row(k).normalize();
  return protos;
}

EmbeddingSet sample_rows(const RowMatrix& protos, std::size_t per_class, double sigma,
                         SplitTag split, Rng& rng) {
  const auto c = static_cast<std::size_t>(protos.rows());
  const auto d = protos.cols();
  EmbeddingSet set;
  set.dim = static_cast<std::size_t>(d);
  set.split = split;
  set.labels.reserve(c * per_class);
  set.features.resize(static_cast<Eigen::Index>(c * per_class), d);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t n = 0; n < per_class; ++n, ++row) {
      Vector x = protos.row(static_cast<Eigen::Index>(k)).transpose();
      if (sigma > 0.0) {
        for (Eigen::Index i = 0; i < d; ++i) x(i) += rng.normal(0.0, sigma);
      }
      set.features.row(row) = normalized(x).transpose();
      set.labels.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return set;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  check_synthetic_spec(spec);
  Rng rng(spec.seed);

  SyntheticData out;
  RowMatrix protos = make_prototypes(spec, rng);
  RowMatrix image_means = protos;
  if (spec.modality_gap > 0.0) {
    for (Eigen::Index k = 0; k < image_means.rows(); ++k) {
      for (Eigen::Index i = 0; i < image_means.cols(); ++i) {
        image_means(k, i) += rng.normal(0.0, spec.modality_gap);
      }
      image_means.row(k).normalize();
    }
  }
  out.train = sample_rows(image_means, spec.train_per_class, spec.intra_noise, SplitTag::train, rng);
  out.val = sample_rows(image_means, spec.val_per_class, spec.intra_noise, SplitTag::val, rng);

  out.catalog.text_features = std::move(protos);
  out.catalog.counts.assign(spec.num_classes, spec.train_per_class);
  out.catalog.names.reserve(spec.num_classes);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    std::ostringstream name;
    name << "class_" << (k < 10 ? "0" : "") << k;
    out.catalog.names.push_back(name.str());
  }
  return out;
}

}  // namespace lfm
