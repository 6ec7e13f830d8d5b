#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfm/datamodel.hpp"
#include "lfm/textguide.hpp"

namespace lfm::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// The measured quantity that was compared against `threshold`.
  double metric = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Closed-form label shift against the golden-section argmin over random triples.
CheckResult label_shift_argmin(std::size_t trials, std::uint64_t seed);

/// KS distance of the Beta(1/2, 1/2) sampler from the arcsine CDF.
CheckResult beta_sampler(std::size_t samples, std::uint64_t seed);

/// Analytic gradients of adapter -> normalize -> cosine -> soft CE (plain and balanced)
/// against central differences; metric is the worst relative error.
CheckResult gradient_check(std::size_t points, std::uint64_t seed);

/// Pair-sampler Monte Carlo against the analytic model: per-cell conditional
/// frequencies (3 binomial sigma), class-membership frequencies against
/// effective_class_distribution (3 sigma), and a pooled chi-square (p > 0.001).
std::vector<CheckResult> sampler_fidelity(const LocalSamplingModel& model, const EmbeddingSet& data,
                                          std::size_t draws, std::uint64_t seed);

/// sampler_fidelity on a fixed three-class model.
std::vector<CheckResult> sampler_fidelity(std::size_t draws, std::uint64_t seed);

std::vector<CheckResult> run_all(std::uint64_t seed);

nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace lfm::verify
