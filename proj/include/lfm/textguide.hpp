#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lfm/datamodel.hpp"
#include "lfm/rng.hpp"

namespace lfm {

/// Text-similarity pair-sampling distribution.
///
/// `p_first[k]` is the probability that the first member of a pair has class k
/// (its share of the training rows). Row i of `p_cond` is the distribution of
/// the second member's class given the first is i: a temperature softmax of the
/// text-feature similarities over the other classes, with a zero diagonal.
struct LocalSamplingModel {
  double tau = 0.05;
  std::vector<double> p_first;
  RowMatrix p_cond;

  std::size_t num_classes() const { return p_first.size(); }
};

LocalSamplingModel build_sampling_model(const ClassCatalog& catalog, double tau);

/// Same as build_sampling_model but from an explicit similarity matrix (tests, analysis).
LocalSamplingModel build_sampling_model(const RowMatrix& similarity,
                                        const std::vector<std::size_t>& counts, double tau);

/// Probability that class y appears in a sampled pair, P(y in {y_i, y_j}).
///
/// Since y_i != y_j the two events are disjoint, so this is
///   p_first[y] + (1 - p_first[y]) * P(y_j = y | y_i != y)
///   = p_first[y] + sum_{k != y} p_cond[k][y] * p_first[k].
/// Entries sum to 2.
std::vector<double> effective_class_distribution(const LocalSamplingModel& model);

/// The same quantity with P(y_j = y | y_i != y) replaced by the unconditioned
/// sum_{k != y} p_cond[k][y] * p_first[k]:
///   p_first[y] + (1 - p_first[y]) * sum_{k != y} p_cond[k][y] * p_first[k].
/// Slightly smaller than the exact value; kept for comparison with published figures.
std::vector<double> effective_class_distribution_independent(const LocalSamplingModel& model);

/// max / min of effective_class_distribution.
double effective_imbalance_factor(const LocalSamplingModel& model);
double imbalance_factor(const std::vector<double>& distribution);

struct LabeledFeature {
  std::uint32_t label = 0;
  std::size_t row = 0;
};

struct SampledPair {
  LabeledFeature first;
  LabeledFeature second;
};

/// How the second member of a pair is chosen.
enum class PairMode {
  /// Second class from p_cond[first class], never equal to the first.
  local,
  /// Second row uniformly over the whole training set (standard mixup pairing).
  uniform,
};

/// Infinite stream of training pairs over one EmbeddingSet.
///
/// First members walk a fresh seeded permutation of all rows each epoch
/// (uniform without replacement, hence class k with probability n_k / N).
/// Second members are drawn with replacement.
class PairStream {
 public:
  PairStream(const LocalSamplingModel& model, const EmbeddingSet& data, std::uint64_t seed,
             PairMode mode = PairMode::local);

  SampledPair next();

  /// Second member for a given first class; exposed so tests can drive rows directly.
  LabeledFeature draw_second(std::uint32_t first_class);

  std::size_t epoch() const { return epoch_; }
  std::size_t rows_per_epoch() const { return order_.size(); }

 private:
  void reshuffle();

  PairMode mode_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> pools_;
  std::vector<std::vector<double>> cdf_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

/// Inverse-CDF draw from a cumulative table; never returns a zero-probability index.
std::size_t sample_categorical(const std::vector<double>& cdf, double u);
std::vector<double> cumulative(const double* probs, std::size_t n);

}  // namespace lfm
