#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bohmstab/relaxation.hpp"

using namespace bohmstab;

namespace {

Ensemble make_points(std::vector<PhaseSpacePoint> pts) {
  Ensemble e;
  e.truncation_times.assign(pts.size(), std::nan(""));
  e.points = std::move(pts);
  return e;
}

CellField blank(const CoarseGrid& g) { return {g, std::vector<double>(g.cells(), 0.0), 0.0}; }

}  // namespace

TEST(CoarseGrain, SingleParticle) {
  const CoarseGrid g{{0.0, 4.0}, {0.0, 4.0}, 4, 4};
  const CellField f = coarse_grain(make_points({{1.5, 2.5}}), g);
  for (std::size_t c = 0; c < g.cells(); ++c) EXPECT_EQ(f.values[c], c == g.index(1, 2) ? 1.0 : 0.0);
  EXPECT_EQ(f.out_of_range_mass, 0.0);
}

TEST(CoarseGrain, OneParticlePerCell) {
  const CoarseGrid g{{0.0, 1.0}, {0.0, 1.0}, 4, 4};
  std::vector<PhaseSpacePoint> pts;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) pts.push_back({(i + 0.5) / 4.0, (j + 0.5) / 4.0});
  }
  const CellField f = coarse_grain(make_points(pts), g);
  for (double v : f.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(CoarseGrain, CountingIdentityAndTruncation) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  Ensemble ens = sample_equilibrium(model, KernelSpec::gaussian(1.0), 0.0, 20'000, 3);
  ens.truncation_times[0] = 0.0;
  ens.truncated_count = 1;
  const CoarseGrid g{{-2.0, 2.0}, {-1.0, 1.0}, 10, 8};
  const CellField f = coarse_grain(ens, g);
  EXPECT_GT(f.out_of_range_mass, 0.0);
  EXPECT_NEAR(f.mass() + f.out_of_range_mass, 1.0, 1e-12);
  const CellField r = reference::coarse_grain(ens, g);
  EXPECT_EQ(f.values, r.values);
  EXPECT_EQ(f.out_of_range_mass, r.out_of_range_mass);
}

TEST(EquilibriumCells, CoherentCoverageAndConvergence) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  const auto k = KernelSpec::gaussian(1.0);
  const CoarseGrid g;
  const CellField f8 = equilibrium_cell_averages(model, k, g, 0.0, 8);
  const CellField f16 = equilibrium_cell_averages(model, k, g, 0.0, 16);
  EXPECT_GE(f8.mass(), 0.9999);
  EXPECT_NEAR(f8.mass() + f8.out_of_range_mass, 1.0, 1e-15);
  for (std::size_t c = 0; c < g.cells(); ++c) EXPECT_LT(std::abs(f8.values[c] - f16.values[c]), 1e-8);
  const CellField r = reference::equilibrium_cell_averages(model, k, g, 0.0, 8);
  EXPECT_EQ(f8.values, r.values);
}

TEST(EquilibriumCells, GroundStateSymmetry) {
  const auto model = WaveFunctionModel::coherent_state(0.0);
  const CoarseGrid g{{-5.0, 5.0}, {-5.0, 5.0}, 20, 20};
  for (const auto& k : {KernelSpec::gaussian(0.8), KernelSpec::lorentzian(0.8)}) {
    const CellField f = equilibrium_cell_averages(model, k, g, 0.3);
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      for (std::size_t ip = 0; ip < g.np; ++ip) {
        const double v = f.values[g.index(ix, ip)];
        EXPECT_NEAR(v, f.values[g.index(g.nx - 1 - ix, ip)], 1e-16);
        EXPECT_NEAR(v, f.values[g.index(ix, g.np - 1 - ip)], 1e-16);
      }
    }
  }
}

TEST(EquilibriumCells, RejectsDiracAndBadOrder) {
  const auto model = WaveFunctionModel::coherent_state(0.0);
  try {
    equilibrium_cell_averages(model, KernelSpec::dirac(), {}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DiracKernel);
  }
  EXPECT_THROW(equilibrium_cell_averages(model, KernelSpec::gaussian(1.0), {}, 0.0, 5), Error);
}

TEST(HFunction, VanishesAtEquilibrium) {
  const auto model = WaveFunctionModel::equal_superposition(3, 0.2);
  const CellField feq = equilibrium_cell_averages(model, KernelSpec::gaussian(1.0), {}, 0.5);
  EXPECT_EQ(h_function(feq, feq), 0.0);
}

TEST(HFunction, TwoCellArithmetic) {
  const CoarseGrid g{{0.0, 4.0}, {0.0, 4.0}, 4, 4};
  CellField f = blank(g), feq = blank(g);
  f.values[0] = 0.8;
  f.values[1] = 0.2;
  feq.values[0] = 0.5;
  feq.values[1] = 0.5;
  const double expected = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
  EXPECT_NEAR(h_function(f, feq), expected, 1e-15);
  EXPECT_NEAR(expected, 0.1927, 1e-4);
}

TEST(HFunction, GibbsInequality) {
  const CoarseGrid g{{0.0, 1.0}, {0.0, 1.0}, 4, 5};
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    CellField f = blank(g), feq = blank(g);
    double sf = 0.0, se = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      f.values[c] = u(gen) < 0.2 ? 0.0 : u(gen);
      feq.values[c] = u(gen) + 1e-3;
      sf += f.values[c];
      se += feq.values[c];
    }
    for (std::size_t c = 0; c < g.cells(); ++c) {
      f.values[c] /= sf * g.cell_volume();
      feq.values[c] /= se * g.cell_volume();
    }
    EXPECT_GE(h_function(f, feq), -1e-14);
  }
}

TEST(HFunction, ErrorReports) {
  const CoarseGrid g{{0.0, 4.0}, {0.0, 4.0}, 4, 4};
  CellField f = blank(g), feq = blank(g);
  f.values[3] = 0.25;
  try {
    h_function(f, feq);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SupportMismatch);
    EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos);
  }
  CoarseGrid other = g;
  other.np = 5;
  try {
    h_function(f, blank(other));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(Bootstrap, EquilibriumSampleSitsInsideFloor) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  const auto k = KernelSpec::gaussian(1.0);
  const CoarseGrid g;
  const CellField feq = equilibrium_cell_averages(model, k, g, 0.0);
  const Ensemble ens = sample_equilibrium(model, k, 0.0, 50'000, 8);
  const CellField f = coarse_grain(ens, g);
  const BootstrapFloor floor = bootstrap_floor(f, feq, ens.size(), 200, 8);
  EXPECT_GT(floor.bias, 0.0);
  EXPECT_LT(std::abs(h_function(f, feq)), floor.floor);
  const BootstrapFloor again = bootstrap_floor(f, feq, ens.size(), 200, 8);
  EXPECT_EQ(floor.floor, again.floor);
}

TEST(Bootstrap, DoublingParticlesHalvesEquilibriumH) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  const auto k = KernelSpec::gaussian(1.0);
  const CoarseGrid g;
  const CellField feq = equilibrium_cell_averages(model, k, g, 0.0);
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    small += h_function(coarse_grain(sample_equilibrium(model, k, 0.0, 20'000, 100 + seed), g), feq);
    large += h_function(coarse_grain(sample_equilibrium(model, k, 0.0, 40'000, 200 + seed), g), feq);
  }
  EXPECT_NEAR(small / large, 2.0, 0.5);
}

TEST(Relaxation, OffsetHIsStableAcrossGridRefinement) {
  const auto model = WaveFunctionModel::equal_superposition(4, 0.5);
  const auto k = KernelSpec::gaussian(1.0);
  const Ensemble ens = sample_nonequilibrium(model, NonEquilibriumSpec::offset(1.0), k, 0.0, 200'000, 5);
  double h[2];
  int i = 0;
  for (std::size_t cells : {20u, 40u}) {
    const CoarseGrid g{{-6.0, 6.0}, {-6.0, 6.0}, cells, cells};
    h[i++] = h_function(coarse_grain(ens, g), equilibrium_cell_averages(model, k, g, 0.0));
  }
  EXPECT_GT(h[0], 0.1);
  EXPECT_NEAR(h[1] / h[0], 1.0, 0.2);
}

TEST(Relaxation, ShortRunShape) {
  const RelaxationSpec spec{.model = WaveFunctionModel::coherent_state(1.0),
                            .kernel = KernelSpec::gaussian(1.0),
                            .neq = NonEquilibriumSpec::offset(1.0),
                            .n = 5000,
                            .times = parse_schedule("0:1:2"),
                            .integrator = {.dt = 0.02},
                            .seed = 4,
                            .bootstrap_resamples = 20};
  const HSeries s = run_relaxation(spec);
  ASSERT_EQ(s.times.size(), 3u);
  EXPECT_EQ(s.times[1], 0.5);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GT(s.hbar[i], 0.0);
    EXPECT_GT(s.floor[i], 0.0);
    EXPECT_EQ(s.truncated[i], 0u);
  }
}

TEST(Relaxation, RejectsDiracAndPoorCoverage) {
  RelaxationSpec spec{.model = WaveFunctionModel::coherent_state(1.0), .kernel = KernelSpec::dirac(), .n = 10,
                      .times = {0.0}};
  try {
    run_relaxation(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DiracKernel);
  }
  spec.kernel = KernelSpec::lorentzian(1.0);
  EXPECT_THROW(run_relaxation(spec), Error);
}

TEST(Parsing, GridAndSchedule) {
  const CoarseGrid g = CoarseGrid::parse("-6,6,30,-5,5,20");
  EXPECT_EQ(g.nx, 30u);
  EXPECT_EQ(g.p.lo, -5.0);
  EXPECT_EQ(CoarseGrid::parse(g.describe()), g);
  EXPECT_THROW(CoarseGrid::parse("-6,6,3,-5,5,20"), Error);
  EXPECT_THROW(CoarseGrid::parse("-6,6,30,-5,5"), Error);
  const auto times = parse_schedule("0:20:10");
  ASSERT_EQ(times.size(), 11u);
  EXPECT_EQ(times[1], 2.0);
  EXPECT_EQ(times.back(), 20.0);
  EXPECT_THROW(parse_schedule("0:20"), Error);
  EXPECT_THROW(parse_schedule("5:1:3"), Error);
}
