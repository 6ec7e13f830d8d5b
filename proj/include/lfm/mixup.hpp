#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lfm/datamodel.hpp"
#include "lfm/rng.hpp"

namespace lfm {

/// How the label weight lambda_y is derived from the feature weight lambda_x.
enum class LabelRule {
  /// lambda_y = lambda_x (standard mixup).
  plain,
  /// Count-threshold relabelling toward the minority class.
  remix,
  /// lambda_y = clamp(lambda_x - alpha (n_i - n_j) / (n_i + n_j), 0, 1).
  label_shift,
};

struct ShiftParams {
  double alpha = 1.0;
  double beta_a = 0.5;
  double beta_b = 0.5;
  LabelRule rule = LabelRule::label_shift;
  /// Remix count-ratio threshold and lambda threshold.
  double remix_kappa = 3.0;
  double remix_tau = 0.5;

  void validate() const;
};

/// One blended training example. `feature` is not re-normalized.
struct MixedExample {
  Vector feature;
  Vector soft_label;
  double lambda_x = 1.0;
  double lambda_y = 1.0;
  std::uint32_t class_i = 0;
  std::uint32_t class_j = 0;
};

/// Label weight on class i after shifting toward the rarer class.
double label_shift(double lambda_x, double alpha, std::size_t n_i, std::size_t n_j);

/// Remix: all label mass goes to the minority class when the count ratio is at
/// least kappa and the minority's feature share is at least tau; otherwise lambda_x.
double remix_label(double lambda_x, std::size_t n_i, std::size_t n_j, double kappa, double tau);

/// Minimizes (l - lambda_x)^2 / 2 + alpha * ((l - 1/2)^2 - (l - p)^2) over l in [0, 1]
/// by golden-section search to an interval width of `tolerance`.
/// Independent of label_shift; used as its numerical oracle.
double label_shift_argmin_numeric(double lambda_x, double alpha, double p, double tolerance = 1e-8);

/// Beta(a, b) draw. Beta(1/2, 1/2) uses the exact transform sin^2(pi U / 2).
double sample_beta(double a, double b, Rng& rng);

/// Blend two rows with a given lambda_x.
MixedExample mix_with_lambda(const Eigen::Ref<const Vector>& x_i, std::uint32_t y_i,
                             const Eigen::Ref<const Vector>& x_j, std::uint32_t y_j,
                             double lambda_x, const ShiftParams& shift,
                             const std::vector<std::size_t>& counts);

/// Blend two rows with lambda_x ~ Beta(beta_a, beta_b).
MixedExample mix(const Eigen::Ref<const Vector>& x_i, std::uint32_t y_i,
                 const Eigen::Ref<const Vector>& x_j, std::uint32_t y_j, const ShiftParams& shift,
                 const std::vector<std::size_t>& counts, Rng& rng);

}  // namespace lfm
