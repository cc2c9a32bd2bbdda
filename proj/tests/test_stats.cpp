#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bohmstab/stats.hpp"

using namespace bohmstab;

TEST(Kolmogorov, KnownCriticalValues) {
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 1e-4);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
  EXPECT_LT(kolmogorov_survival(4.0), 1e-12);
}

TEST(KsTwoSample, SameAndShiftedDistributions) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> a(20000), b(20000), c(20000);
  for (auto& v : a) v = n01(gen);
  for (auto& v : b) v = n01(gen);
  for (auto& v : c) v = n01(gen) + 0.1;
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-6);
  EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
}

TEST(KsOneSample, UniformSample) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (static_cast<double>(i) + 0.5) / 1000.0;
  const TestResult r = ks_one_sample(v, [](double x) { return x; });
  EXPECT_NEAR(r.statistic, 0.0005, 1e-12);
  EXPECT_GT(r.p_value, 0.99);
}

TEST(ChiSquared, PerfectFitAndPooling) {
  const std::vector<double> obs{10, 20, 30, 40};
  const TestResult perfect = chi_squared_gof(obs, obs);
  EXPECT_EQ(perfect.statistic, 0.0);
  EXPECT_EQ(perfect.dof, 3u);
  EXPECT_NEAR(perfect.p_value, 1.0, 1e-12);

  // Expected counts (1, 1, 8, 10) pool the first three bins.
  const std::vector<double> o2{2, 0, 8, 10}, e2{1, 1, 8, 10};
  const TestResult pooled = chi_squared_gof(o2, e2);
  EXPECT_EQ(pooled.dof, 1u);
  EXPECT_EQ(pooled.statistic, 0.0);
}

TEST(ChiSquared, DetectsMismatch) {
  const std::vector<double> obs{100, 100, 100, 100}, exp{50, 150, 100, 100};
  const TestResult r = chi_squared_gof(obs, exp);
  EXPECT_NEAR(r.statistic, 50.0 + 2500.0 / 150.0, 1e-12);
  EXPECT_LT(r.p_value, 1e-10);
}

TEST(LinearTrend, ExactAndNoisyLines) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{1, -1, -3, -5, -7};
  const TrendFit exact = linear_trend(x, y);
  EXPECT_DOUBLE_EQ(exact.slope, -2.0);
  EXPECT_DOUBLE_EQ(exact.intercept, 1.0);
  EXPECT_EQ(exact.p_negative, 0.0);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> xs, ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(i);
    ys.push_back(1.0 - 0.02 * i + noise(gen));
  }
  const TrendFit fit = linear_trend(xs, ys);
  EXPECT_NEAR(fit.slope, -0.02, 0.005);
  EXPECT_LT(fit.p_negative, 0.01);
  EXPECT_EQ(fit.dof, 38u);
}

TEST(Moments, Quantiles) {
  const std::vector<double> v{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(mean(v), 2.5);
  EXPECT_DOUBLE_EQ(variance(v), 5.0 / 3.0);
}
