#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bohmstab {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
};

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with the
/// Stephens small-sample correction).
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample KS test against a continuous CDF.
TestResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf);

/// Pearson chi-squared goodness of fit. Adjacent bins are pooled until every
/// pooled bin expects at least `min_expected` counts. `expected` is rescaled
/// to the observed total.
TestResult chi_squared_gof(std::span<const double> observed, std::span<const double> expected,
                           double min_expected = 5.0);

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double t_statistic = 0.0;
  std::size_t dof = 0;
  /// One-sided p-value for slope < 0.
  double p_negative = 1.0;
};

/// Ordinary least-squares line through (x, y) with a Student-t test on the slope.
TrendFit linear_trend(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double variance(std::span<const double> v);
/// Linear-interpolated sample quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace bohmstab
