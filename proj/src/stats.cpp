#include "lfm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace lfm::stats {

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

double arcsine_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 2.0 / std::numbers::pi * std::asin(std::sqrt(x));
}

double chi_square_sf(double statistic, double dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

ChiSquare chi_square_test(const std::vector<std::size_t>& observed,
                          const std::vector<double>& probabilities) {
  if (observed.size() != probabilities.size()) {
    throw std::invalid_argument("chi-square: observed and expected differ in length");
  }
  const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
  ChiSquare out;
  std::size_t cells = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double expected = n * probabilities[k];
    if (expected <= 0.0) {
      if (observed[k] != 0) {
        out.statistic = std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
        return out;
      }
      continue;
    }
    const double diff = static_cast<double>(observed[k]) - expected;
    out.statistic += diff * diff / expected;
    ++cells;
  }
  out.dof = static_cast<double>(cells > 1 ? cells - 1 : 1);
  out.p_value = chi_square_sf(out.statistic, out.dof);
  return out;
}

double max_binomial_z(const std::vector<std::size_t>& observed,
                      const std::vector<double>& probabilities, std::size_t trials) {
  const double n = static_cast<double>(trials);
  double worst = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double p = probabilities[k];
    if (p <= 0.0 || p >= 1.0) {
      const double expected = n * p;
      if (static_cast<double>(observed[k]) != expected) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double sigma = std::sqrt(n * p * (1.0 - p));
    worst = std::max(worst, std::abs(static_cast<double>(observed[k]) - n * p) / sigma);
  }
  return worst;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace lfm::stats
