#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace lfm::stats {

/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// sup_x |F_a(x) - F_b(x)| between two empirical CDFs.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// CDF of Beta(1/2, 1/2): (2 / pi) asin(sqrt(x)).
double arcsine_cdf(double x);

/// Upper tail P(X >= statistic) of a chi-squared variable.
double chi_square_sf(double statistic, double dof);

struct ChiSquare {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Pearson goodness of fit. Cells with zero expected probability are dropped from the
/// degrees of freedom; any observation in such a cell gives p = 0.
ChiSquare chi_square_test(const std::vector<std::size_t>& observed,
                          const std::vector<double>& probabilities);

/// Largest |observed - n p| / sqrt(n p (1 - p)) over the cells with 0 < p < 1.
double max_binomial_z(const std::vector<std::size_t>& observed,
                      const std::vector<double>& probabilities, std::size_t trials);

double median(std::vector<double> values);

}  // namespace lfm::stats
