#include "lfm/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lfm/errors.hpp"

namespace lfm {

void ShiftParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(beta_a > 0.0) || !(beta_b > 0.0)) throw ConfigError("Beta parameters must be positive");
  if (!(remix_kappa >= 1.0)) throw ConfigError("remix kappa must be >= 1");
  if (!(remix_tau >= 0.0 && remix_tau <= 1.0)) throw ConfigError("remix tau must lie in [0, 1]");
}

double label_shift(double lambda_x, double alpha, std::size_t n_i, std::size_t n_j) {
  if (!(lambda_x >= 0.0 && lambda_x <= 1.0)) throw ConfigError("lambda_x must lie in [0, 1]");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (n_i < 1 || n_j < 1) throw ConfigError("class counts must be >= 1");
  const double ni = static_cast<double>(n_i);
  const double nj = static_cast<double>(n_j);
  return std::clamp(lambda_x - alpha * (ni - nj) / (ni + nj), 0.0, 1.0);
}

double remix_label(double lambda_x, std::size_t n_i, std::size_t n_j, double kappa, double tau) {
  const double ratio = static_cast<double>(n_i) / static_cast<double>(n_j);
  if (ratio >= kappa && lambda_x < tau) return 0.0;
  if (ratio <= 1.0 / kappa && 1.0 - lambda_x < tau) return 1.0;
  return lambda_x;
}

double label_shift_argmin_numeric(double lambda_x, double alpha, double p, double tolerance) {
  auto objective = [&](double l) {
    double fit = l - lambda_x;
    double balance = (l - 0.5) * (l - 0.5) - (l - p) * (l - p);
    return 0.5 * fit * fit + alpha * balance;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = 1.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = objective(c);
  double fd = objective(d);
  while (hi - lo > tolerance) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = objective(d);
    }
  }
  // The constrained minimum may sit on a boundary the bracket only approaches.
  double best = 0.5 * (lo + hi);
  for (double edge : {0.0, 1.0}) {
    if (objective(edge) < objective(best)) best = edge;
  }
  return best;
}

double sample_beta(double a, double b, Rng& rng) {
  if (a == 0.5 && b == 0.5) {
    double s = std::sin(std::numbers::pi * rng.uniform() / 2.0);
    return s * s;
  }
  double x = std::gamma_distribution<double>(a, 1.0)(rng.engine());
  double y = std::gamma_distribution<double>(b, 1.0)(rng.engine());
  return x / (x + y);
}

MixedExample mix_with_lambda(const Eigen::Ref<const Vector>& x_i, std::uint32_t y_i,
                             const Eigen::Ref<const Vector>& x_j, std::uint32_t y_j,
                             double lambda_x, const ShiftParams& shift,
                             const std::vector<std::size_t>& counts) {
  if (x_i.size() != x_j.size()) throw DataError("cannot mix features of different dimension");
  if (y_i >= counts.size() || y_j >= counts.size()) throw DataError("mixed label out of range");

  MixedExample out;
  out.class_i = y_i;
  out.class_j = y_j;
  out.lambda_x = lambda_x;
  switch (shift.rule) {
    case LabelRule::plain:
      out.lambda_y = lambda_x;
      break;
    case LabelRule::remix:
      out.lambda_y =
          remix_label(lambda_x, counts[y_i], counts[y_j], shift.remix_kappa, shift.remix_tau);
      break;
    case LabelRule::label_shift:
      out.lambda_y = label_shift(lambda_x, shift.alpha, counts[y_i], counts[y_j]);
      break;
  }
  out.feature = lambda_x * x_i + (1.0 - lambda_x) * x_j;
  out.soft_label = Vector::Zero(static_cast<Eigen::Index>(counts.size()));
  out.soft_label(y_i) += out.lambda_y;
  out.soft_label(y_j) += 1.0 - out.lambda_y;
  return out;
}

MixedExample mix(const Eigen::Ref<const Vector>& x_i, std::uint32_t y_i,
                 const Eigen::Ref<const Vector>& x_j, std::uint32_t y_j, const ShiftParams& shift,
                 const std::vector<std::size_t>& counts, Rng& rng) {
  double lambda_x = sample_beta(shift.beta_a, shift.beta_b, rng);
  return mix_with_lambda(x_i, y_i, x_j, y_j, lambda_x, shift, counts);
}

}  // namespace lfm
