#include "lfm/textguide.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lfm/errors.hpp"

namespace lfm {

LocalSamplingModel build_sampling_model(const RowMatrix& similarity,
                                        const std::vector<std::size_t>& counts, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be a positive number");
  const auto c = counts.size();
  if (c < 2) throw ConfigError("local sampling needs at least 2 classes");
  if (static_cast<std::size_t>(similarity.rows()) != c ||
      static_cast<std::size_t>(similarity.cols()) != c) {
    throw ConfigError("similarity matrix must be C x C");
  }

  LocalSamplingModel model;
  model.tau = tau;

  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total <= 0.0) throw DataError("class counts sum to zero");
  model.p_first.resize(c);
  for (std::size_t k = 0; k < c; ++k) model.p_first[k] = static_cast<double>(counts[k]) / total;

  model.p_cond = RowMatrix::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(c); ++i) {
    // Subtract the off-diagonal row max so that exp never overflows at small tau.
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < similarity.cols(); ++j) {
      if (j != i) row_max = std::max(row_max, similarity(i, j));
    }
    double sum = 0.0;
    for (Eigen::Index j = 0; j < similarity.cols(); ++j) {
      if (j == i) continue;
      double e = std::exp((similarity(i, j) - row_max) / tau);
      model.p_cond(i, j) = e;
      sum += e;
    }
    model.p_cond.row(i) /= sum;
  }
  return model;
}

LocalSamplingModel build_sampling_model(const ClassCatalog& catalog, double tau) {
  catalog.validate();
  RowMatrix similarity = catalog.text_features * catalog.text_features.transpose();
  return build_sampling_model(similarity, catalog.counts, tau);
}

namespace {

std::vector<double> second_member_mass(const LocalSamplingModel& model) {
  const auto c = model.num_classes();
  std::vector<double> mass(c, 0.0);
  for (std::size_t y = 0; y < c; ++y) {
    for (std::size_t k = 0; k < c; ++k) {
      if (k == y) continue;
      mass[y] += model.p_cond(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(y)) *
                 model.p_first[k];
    }
  }
  return mass;
}

}  // namespace

std::vector<double> effective_class_distribution(const LocalSamplingModel& model) {
  auto out = second_member_mass(model);
  for (std::size_t y = 0; y < out.size(); ++y) out[y] += model.p_first[y];
  return out;
}

std::vector<double> effective_class_distribution_independent(const LocalSamplingModel& model) {
  auto out = second_member_mass(model);
  for (std::size_t y = 0; y < out.size(); ++y) {
    out[y] = model.p_first[y] + (1.0 - model.p_first[y]) * out[y];
  }
  return out;
}

double imbalance_factor(const std::vector<double>& distribution) {
  auto [lo, hi] = std::minmax_element(distribution.begin(), distribution.end());
  return *hi / *lo;
}

double effective_imbalance_factor(const LocalSamplingModel& model) {
  return imbalance_factor(effective_class_distribution(model));
}

std::vector<double> cumulative(const double* probs, std::size_t n) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  return cdf;
}

std::size_t sample_categorical(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it != cdf.end()) return static_cast<std::size_t>(it - cdf.begin());
  // u fell past the rounded total: take the last index that carries mass.
  std::size_t i = cdf.size() - 1;
  while (i > 0 && cdf[i] == cdf[i - 1]) --i;
  return i;
}

PairStream::PairStream(const LocalSamplingModel& model, const EmbeddingSet& data,
                       std::uint64_t seed, PairMode mode)
    : mode_(mode), rng_(seed), labels_(data.labels) {
  const auto c = model.num_classes();
  if (data.size() == 0) throw DataError("cannot sample pairs from an empty embedding set");
  pools_.resize(c);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (labels_[i] >= c) throw DataError("label out of range for the sampling model");
    pools_[labels_[i]].push_back(i);
  }
  if (mode_ == PairMode::local) {
    for (std::size_t k = 0; k < c; ++k) {
      if (pools_[k].empty()) {
        std::ostringstream msg;
        msg << "class " << k << " has no training rows; local sampling needs every class";
        throw DataError(msg.str());
      }
    }
  }
  cdf_.reserve(c);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(c); ++i) {
    cdf_.push_back(cumulative(model.p_cond.row(i).data(), c));
  }
  order_.resize(data.size());
  reshuffle();
}

void PairStream::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng_.engine());
  cursor_ = 0;
}

LabeledFeature PairStream::draw_second(std::uint32_t first_class) {
  if (mode_ == PairMode::uniform) {
    std::size_t row = rng_.index(labels_.size());
    return {labels_[row], row};
  }
  auto cls = sample_categorical(cdf_.at(first_class), rng_.uniform());
  const auto& pool = pools_[cls];
  return {static_cast<std::uint32_t>(cls), pool[rng_.index(pool.size())]};
}

SampledPair PairStream::next() {
  if (cursor_ == order_.size()) {
    ++epoch_;
    reshuffle();
  }
  std::size_t row = order_[cursor_++];
  LabeledFeature first{labels_[row], row};
  return {first, draw_second(first.label)};
}

}  // namespace lfm
