#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bohmstab/kernels.hpp"

using namespace bohmstab;

namespace {

FieldSample flat_fields(double rho, double grad_s) {
  FieldSample f;
  f.rho = rho;
  f.grad_s = grad_s;
  f.valid = true;
  return f;
}

double quantile(std::vector<double> v, double q) {
  const auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

TEST(EquilibriumDensity, GaussianPeakValue) {
  EXPECT_NEAR(equilibrium_density(KernelSpec::gaussian(1.0), flat_fields(1.0, 0.0), 0.0), 1.0 / std::sqrt(std::numbers::pi),
              1e-15);
  EXPECT_NEAR(1.0 / std::sqrt(std::numbers::pi), 0.5642, 1e-4);
}

TEST(EquilibriumDensity, LorentzianPeakValue) {
  EXPECT_NEAR(equilibrium_density(KernelSpec::lorentzian(1.0), flat_fields(1.0, 0.0), 0.0), 1.0 / std::numbers::pi,
              1e-15);
}

TEST(EquilibriumDensity, VanishesWithAmplitude) {
  for (const auto& spec : {KernelSpec::gaussian(0.7), KernelSpec::lorentzian(0.7)}) {
    EXPECT_EQ(equilibrium_density(spec, flat_fields(0.0, 1.3), 1.3), 0.0);
  }
}

TEST(EquilibriumDensity, EvenInMomentumDeviation) {
  for (const auto& spec : {KernelSpec::gaussian(0.3), KernelSpec::lorentzian(2.0)}) {
    const FieldSample f = flat_fields(0.4, -0.8);
    for (double u : {0.01, 0.5, 1.7, 6.0}) {
      EXPECT_DOUBLE_EQ(equilibrium_density(spec, f, f.grad_s + u), equilibrium_density(spec, f, f.grad_s - u));
    }
  }
}

TEST(EquilibriumDensity, ErrorPaths) {
  try {
    equilibrium_density(KernelSpec::dirac(), flat_fields(1.0, 0.0), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DiracDensityRequest);
  }
  FieldSample node;
  try {
    equilibrium_density(KernelSpec::gaussian(1.0), node, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidField);
  }
  EXPECT_THROW(KernelSpec::gaussian(0.0), Error);
  EXPECT_THROW(KernelSpec::lorentzian(-1.0), Error);
  EXPECT_THROW(make_kernel("cauchy", 1.0), Error);
  EXPECT_EQ(make_kernel("dirac", 5.0).kind, KernelSpec::Kind::Dirac);
}

TEST(KernelProfile, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (const auto& spec : {KernelSpec::gaussian(0.6), KernelSpec::lorentzian(0.6)}) {
    for (double u : {-2.0, -0.3, 0.0, 0.9}) {
      const double fd = (spec.profile(u + h) - spec.profile(u - h)) / (2.0 * h);
      EXPECT_NEAR(spec.profile_derivative(u), fd, 1e-8);
    }
  }
}

TEST(Marginals, GaussianOnCoherentState) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  for (double t : {0.0, 1.3}) {
    const MarginalReport r = check_marginals(KernelSpec::gaussian(1.0), model, t);
    EXPECT_EQ(r.positions_checked, 50);
    EXPECT_LT(r.density_error, 1e-10);
    EXPECT_LT(r.current_error, 1e-10);
  }
}

TEST(Marginals, DiracIsExact) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  const MarginalReport r = check_marginals(KernelSpec::dirac(), model, 0.4);
  EXPECT_EQ(r.density_error, 0.0);
  EXPECT_EQ(r.current_error, 0.0);
}

TEST(Marginals, LorentzianPrincipalValue) {
  const auto model = WaveFunctionModel::equal_superposition(3, 0.7);
  const MarginalReport r = check_marginals(KernelSpec::lorentzian(0.5), model, 0.9, {.positions = 20});
  EXPECT_GT(r.positions_checked, 10);
  EXPECT_LT(r.density_error, 1e-6);
  EXPECT_LT(r.current_error, 1e-6);
}

TEST(ConditionalSampling, GaussianMoments) {
  const FieldSample f = flat_fields(1.0, 1.0);
  const auto spec = KernelSpec::gaussian(2.0);
  constexpr int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    RandomStream rng(42, static_cast<std::uint64_t>(i));
    const double p = sample_conditional_momentum(spec, f, rng);
    sum += p;
    sum2 += p * p;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  EXPECT_NEAR(mean, 1.0, 0.004);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(ConditionalSampling, DiracIsDeterministic) {
  RandomStream rng(1, 0);
  EXPECT_EQ(sample_conditional_momentum(KernelSpec::dirac(), flat_fields(1.0, -0.5), rng), -0.5);
}

TEST(ConditionalSampling, LorentzianQuantiles) {
  const FieldSample f = flat_fields(1.0, 0.0);
  const auto spec = KernelSpec::lorentzian(1.0);
  std::vector<double> draws(1'000'000);
  RandomStream rng(3, 0);
  for (double& p : draws) p = sample_conditional_momentum(spec, f, rng);
  EXPECT_NEAR(quantile(draws, 0.5), 0.0, 0.005);
  EXPECT_NEAR(quantile(draws, 0.75) - quantile(draws, 0.25), 2.0, 0.02);
}

TEST(ConditionalSampling, NarrowGaussianConvergesToGradS) {
  const FieldSample f = flat_fields(1.0, 0.37);
  const auto spec = KernelSpec::gaussian(1e-10);
  RandomStream rng(5, 0);
  double worst = 0.0;
  for (int i = 0; i < 100'000; ++i) worst = std::max(worst, std::abs(sample_conditional_momentum(spec, f, rng) - 0.37));
  EXPECT_LT(worst, 1e-4);
}

TEST(ConditionalSampling, StreamsAreReproducible) {
  const FieldSample f = flat_fields(1.0, 0.0);
  const auto spec = KernelSpec::gaussian(1.0);
  RandomStream a(99, 17), b(99, 17), c(99, 18);
  const double pa = sample_conditional_momentum(spec, f, a);
  EXPECT_EQ(pa, sample_conditional_momentum(spec, f, b));
  EXPECT_NE(pa, sample_conditional_momentum(spec, f, c));
}
