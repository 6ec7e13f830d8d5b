#include "lfm/experiment.hpp"

#include "lfm/rng.hpp"

namespace lfm {

BenchmarkConfig default_benchmark() {
  BenchmarkConfig config;
  config.synthetic.num_classes = 20;
  config.synthetic.dim = 32;
  for (std::size_t k = 0; k < 8; ++k) config.synthetic.pair_groups.emplace_back(k, 19 - k);
  config.synthetic.intra_noise = 0.15;
  config.synthetic.modality_gap = 0.2;
  config.synthetic.pair_similarity = 0.85;
  config.synthetic.train_per_class = 500;
  config.synthetic.val_per_class = 50;
  config.gamma = 100.0;
  config.train.stage1 = {5, 0.05, 5e-5, 1.0, 0.05};
  config.train.stage2 = {10, 0.1, 1e-4, 1.0, 0.05};
  return config;
}

BenchmarkData make_benchmark_data(const BenchmarkConfig& config, std::uint64_t seed) {
  SyntheticSpec spec = config.synthetic;
  spec.seed = derive_seed(seed, stream::kSynthetic);
  SyntheticData synth = generate_synthetic(spec);
  auto counts = build_longtail_counts({spec.train_per_class, config.gamma, spec.num_classes});
  auto [train, catalog] =
      subset_longtail(synth.train, synth.catalog, counts, derive_seed(seed, stream::kSubset));
  return {std::move(train), std::move(synth.val), std::move(catalog)};
}

EvalReport run_arm(const BenchmarkData& data, TrainConfig train_config, std::uint64_t seed) {
  train_config.seed = derive_seed(seed, stream::kTrain);
  TrainedHead head = train(data.train, data.val, data.catalog, train_config);
  return evaluate(head, data.val, data.catalog, shot_split(data.catalog.counts));
}

}  // namespace lfm
