#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lfm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr const char* kDefaultPromptTemplate = "a photo of a {CLASS}";

enum class SplitTag { train, val };

/// Labeled unit-norm feature rows. Row i of `features` belongs to `labels[i]`.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<std::uint32_t> labels;
  RowMatrix features;
  SplitTag split = SplitTag::train;

  std::size_t size() const { return labels.size(); }

  /// Row counts per class for classes [0, num_classes).
  std::vector<std::size_t> class_counts(std::size_t num_classes) const;

  /// Throws DataError unless every row is unit-norm and every label < num_classes.
  void validate(std::size_t num_classes) const;
};

/// Class names, training-split counts and frozen text features.
///
/// Counts are stored in class-index order; they are not assumed sorted.
struct ClassCatalog {
  std::vector<std::string> names;
  std::vector<std::size_t> counts;
  RowMatrix text_features;
  std::string prompt_template = kDefaultPromptTemplate;

  std::size_t num_classes() const { return names.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(text_features.cols()); }

  /// Class indices ordered by decreasing count; ties keep class-index order.
  std::vector<std::size_t> sorted_by_count() const;

  /// Prompt for class k with "{CLASS}" substituted.
  std::string prompt(std::size_t k) const;

  void validate() const;
};

struct LongTailSpec {
  std::size_t n_max = 0;
  double gamma = 1.0;
  std::size_t num_classes = 0;
};

struct SyntheticSpec {
  std::size_t num_classes = 20;
  std::size_t dim = 32;
  std::vector<std::pair<std::size_t, std::size_t>> pair_groups;
  double intra_noise = 0.1;
  /// Cosine similarity between the two prototypes of a pair group.
  double pair_similarity = 0.85;
  /// Std of a fixed per-class offset added to the image-side class mean only,
  /// so image clusters sit away from their text feature. 0 keeps them aligned.
  double modality_gap = 0.0;
  std::size_t train_per_class = 500;
  std::size_t val_per_class = 50;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  EmbeddingSet train;
  EmbeddingSet val;
  ClassCatalog catalog;
};

/// Exponential long-tail profile: counts[k] = floor(n_max * gamma^(-k/(C-1))).
std::vector<std::size_t> build_longtail_counts(const LongTailSpec& spec);

/// Seeded random subset with exactly counts[k] rows of class k, original row order kept.
/// Returns the subset and a copy of `catalog` with its counts replaced.
std::pair<EmbeddingSet, ClassCatalog> subset_longtail(const EmbeddingSet& data,
                                                      const ClassCatalog& catalog,
                                                      const std::vector<std::size_t>& counts,
                                                      std::uint64_t seed);

/// Desk-scale stand-in for vision-language embeddings. Paired classes get
/// prototypes at `pair_similarity`; all other prototypes are orthonormal when
/// the dimension allows it and random otherwise.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// x / ||x||; throws DataError for zero or non-finite input.
Vector normalized(const Eigen::Ref<const Vector>& x);

}  // namespace lfm
