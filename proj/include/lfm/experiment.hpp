#pragma once

#include <cstdint>

#include "lfm/datamodel.hpp"
#include "lfm/evaluate.hpp"
#include "lfm/model.hpp"

namespace lfm {

/// Desk-scale long-tailed benchmark: a synthetic balanced set subsetted to an
/// exponential profile, a balanced validation split, and a training recipe.
struct BenchmarkConfig {
  SyntheticSpec synthetic;
  double gamma = 100.0;
  TrainConfig train;
};

/// C = 20, d = 32, gamma = 100, head classes 0..7 paired with tail classes 19..12.
/// Image means sit off the text prototypes (modality gap 0.2), so training has
/// something to correct.
BenchmarkConfig default_benchmark();

struct BenchmarkData {
  EmbeddingSet train;
  EmbeddingSet val;
  ClassCatalog catalog;
};

/// Data for one benchmark seed. Synthetic and subset seeds are derived from `seed`.
BenchmarkData make_benchmark_data(const BenchmarkConfig& config, std::uint64_t seed);

/// Trains `train` (seed derived from `seed`) and evaluates on the validation split.
EvalReport run_arm(const BenchmarkData& data, TrainConfig train, std::uint64_t seed);

}  // namespace lfm
