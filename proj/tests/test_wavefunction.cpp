#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "bohmstab/grid_solver.hpp"
#include "bohmstab/wavefunction.hpp"

using namespace bohmstab;

namespace {

// Closed forms for the unit coherent state (hbar = m = k = 1).
struct CoherentOracle {
  double alpha;
  double center(double t) const { return alpha * std::cos(t); }
  double grad_s(double t) const { return -alpha * std::sin(t); }
  double grad_log_r(double x, double t) const { return -(x - center(t)); }
  double q(double x, double t) const {
    const double d = x - center(t);
    return -0.5 * (d * d - 1.0);
  }
  double grad_q(double x, double t) const { return -(x - center(t)); }
};

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

// Central finite-difference derivatives of psi along x.
cplx fd_d1(const WaveFunctionModel& m, double x, double t, double h) {
  return (m.psi(x + h, t) - m.psi(x - h, t)) / (2.0 * h);
}
cplx fd_d2(const WaveFunctionModel& m, double x, double t, double h) {
  return (m.psi(x + h, t) - 2.0 * m.psi(x, t) + m.psi(x - h, t)) / (h * h);
}

}  // namespace

TEST(CoherentState, FieldsAtPacketCenter) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  const FieldSample f = model.eval_fields(1.0, 0.0);
  ASSERT_TRUE(f.valid);
  EXPECT_NEAR(f.grad_s, 0.0, 1e-14);
  EXPECT_NEAR(f.grad_log_r, 0.0, 1e-14);
  EXPECT_NEAR(f.q, 0.5, 1e-14);
  EXPECT_NEAR(f.grad_q, 0.0, 1e-14);
  EXPECT_NEAR(f.hess_s, 0.0, 1e-14);
}

TEST(CoherentState, FieldsOneWidthOut) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  const FieldSample f = model.eval_fields(2.0, 0.0);
  ASSERT_TRUE(f.valid);
  EXPECT_NEAR(f.grad_log_r, -1.0, 1e-13);
  EXPECT_NEAR(f.q, 0.0, 1e-13);
  EXPECT_NEAR(f.grad_q, -1.0, 1e-13);
  EXPECT_NEAR(f.grad_s, 0.0, 1e-14);
}

TEST(CoherentState, ComplexRouteMatchesClosedFormAtRandomPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-2.5, 2.5), ut(0.0, 20.0), ua(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const CoherentOracle oracle{ua(rng)};
    const auto model = WaveFunctionModel::coherent_state(oracle.alpha);
    const double t = ut(rng);
    const double x = oracle.center(t) + ux(rng);
    const FieldSample f = model.eval_fields(x, t);
    ASSERT_TRUE(f.valid);
    EXPECT_NEAR(f.grad_s, oracle.grad_s(t), 1e-10);
    EXPECT_NEAR(f.grad_log_r, oracle.grad_log_r(x, t), 1e-10);
    EXPECT_NEAR(f.q, oracle.q(x, t), 1e-10);
    EXPECT_NEAR(f.grad_q, oracle.grad_q(x, t), 1e-10);
    EXPECT_NEAR(f.hess_s, 0.0, 1e-10);
  }
}

TEST(CoherentState, ClosedFormNormalizationAgreesWithQuadrature) {
  for (double alpha : {0.0, 1.0, -2.5}) {
    const auto model = WaveFunctionModel::coherent_state(alpha);
    for (double t : {0.0, 0.7, 3.0}) {
      const auto dom = model.sampling_domain(t);
      const double mass = integrate([&](double x) { return std::norm(model.psi(x, t)); }, dom.lo, dom.hi);
      EXPECT_NEAR(mass, 1.0, 1e-12);
    }
  }
}

TEST(CoherentState, NonUnitParameters) {
  SystemParams params{.hbar = 0.5, .mass = 2.0};
  const auto model = WaveFunctionModel::coherent_state(0.8, params, Potential::harmonic(3.0));
  const double t = 0.9;
  const auto dom = model.sampling_domain(t);
  EXPECT_NEAR(integrate([&](double x) { return std::norm(model.psi(x, t)); }, dom.lo, dom.hi), 1.0, 1e-12);
  // fields from psi by finite differences
  const double x = 0.3, h = 1e-4;
  const FieldSample f = model.eval_fields(x, t);
  const cplx w = fd_d1(model, x, t, h) / model.psi(x, t);
  EXPECT_NEAR(f.grad_s, params.hbar * w.imag(), 1e-6);
  EXPECT_NEAR(f.grad_log_r, w.real(), 1e-6);
}

TEST(Superposition, NormalizedAtAllTimes) {
  const auto model = WaveFunctionModel::equal_superposition(4, 0.3);
  for (double t : {0.0, 1.1, 7.5}) {
    const auto dom = model.sampling_domain(t);
    EXPECT_NEAR(integrate([&](double x) { return std::norm(model.psi(x, t)); }, dom.lo, dom.hi), 1.0, 1e-12);
  }
}

TEST(Superposition, RejectsNonUnitAmplitudes) {
  EXPECT_THROW(WaveFunctionModel::eigen_superposition({cplx{1.0, 0.0}, cplx{1.0, 0.0}}), Error);
  EXPECT_THROW(WaveFunctionModel::equal_superposition(2, 0.0, {}, Potential::free()), Error);
}

TEST(Superposition, FieldsMatchFiniteDifferencesOfPsi) {
  const auto model = WaveFunctionModel::equal_superposition(3, 0.9);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), ut(0.0, 6.0);
  const double h = 1e-4;
  for (int i = 0; i < 40; ++i) {
    const double x = ux(rng), t = ut(rng);
    const FieldSample f = model.eval_fields(x, t);
    if (!f.valid || f.rho < 1e-3) continue;
    const cplx psi = model.psi(x, t);
    const cplx w = fd_d1(model, x, t, h) / psi;
    EXPECT_NEAR(f.grad_s, w.imag(), 1e-7);
    EXPECT_NEAR(f.grad_log_r, w.real(), 1e-7);
    // R''/R from second differences of |psi|, and the identity
    // Re(psi''/psi) = R''/R - (S'/hbar)^2
    auto r = [&](double xx) { return std::abs(model.psi(xx, t)); };
    const double lap_r = (r(x + h) - 2.0 * r(x) + r(x - h)) / (h * h) / r(x);
    EXPECT_NEAR(f.q, -0.5 * lap_r, 2e-5 * (1.0 + std::abs(f.q)));
    const double re_ratio = (fd_d2(model, x, t, h) / psi).real();
    EXPECT_NEAR(re_ratio, lap_r - w.imag() * w.imag(), 2e-5 * (1.0 + std::abs(re_ratio)));
    // S'' and Q' from differencing the fields themselves
    const FieldSample fp = model.eval_fields(x + h, t), fm = model.eval_fields(x - h, t);
    EXPECT_NEAR(f.hess_s, (fp.grad_s - fm.grad_s) / (2.0 * h), 1e-5 * (1.0 + std::abs(f.hess_s)));
    EXPECT_NEAR(f.grad_q, (fp.q - fm.q) / (2.0 * h), 1e-5 * (1.0 + std::abs(f.grad_q)));
  }
}

TEST(Superposition, ContinuityEquationHolds) {
  const auto model = WaveFunctionModel::equal_superposition(4, 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), ut(0.0, 10.0);
  const double h = 1e-4;
  for (int i = 0; i < 50; ++i) {
    const double x = ux(rng), t = ut(rng);
    const FieldSample f = model.eval_fields(x, t);
    if (!f.valid || f.rho < 1e-3) continue;
    const double drho_dt = (model.eval_fields(x, t + h).rho - model.eval_fields(x, t - h).rho) / (2.0 * h);
    auto flux = [&](double xx) {
      const FieldSample g = model.eval_fields(xx, t);
      return g.rho * g.grad_s;
    };
    const double dflux_dx = (flux(x + h) - flux(x - h)) / (2.0 * h);
    EXPECT_NEAR(drho_dt + dflux_dx, 0.0, 1e-7);
  }
}

TEST(WaveFunctionModel, NodeRegionIsFlaggedInvalid) {
  const auto model = WaveFunctionModel::coherent_state(1.0);
  EXPECT_FALSE(model.eval_fields(12.0, 0.0).valid);
  // the odd eigenstate has an exact node at the origin
  const auto excited = WaveFunctionModel::eigen_superposition({cplx{0.0}, cplx{1.0}});
  EXPECT_FALSE(excited.eval_fields(0.0, 0.3).valid);
  EXPECT_TRUE(excited.eval_fields(0.5, 0.3).valid);
}

// ---------------------------------------------------------------------------
// Grid solver

namespace {

GridSpec default_grid() { return GridSpec{.x_min = -10.0, .x_max = 10.0, .n_points = 512, .dt = 1e-3}; }

std::shared_ptr<GridSolution> seeded_grid(const WaveFunctionModel& analytic, GridSpec spec = default_grid()) {
  return std::make_shared<GridSolution>(spec, analytic.params(), analytic.potential(),
                                        [&](double x) { return analytic.psi(x, 0.0); });
}

double overlap(const GridSolution& g, std::size_t k, const WaveFunctionModel& analytic) {
  const auto psi = g.psi_values(k);
  cplx acc{};
  for (std::size_t i = 0; i < psi.size(); ++i) acc += std::conj(psi[i]) * analytic.psi(g.x(i), g.snapshot_time(k));
  return std::abs(acc) * g.spec().dx();
}

}  // namespace

TEST(GridSolver, CoherentStateOverlapAtTwo) {
  const auto analytic = WaveFunctionModel::coherent_state(1.0);
  auto grid = seeded_grid(analytic);
  grid->evolve_to(2.0);
  EXPECT_NEAR(grid->t_end(), 2.0, 1e-12);
  EXPECT_GE(overlap(*grid, grid->snapshot_count() - 1, analytic), 1.0 - 1e-6);
}

TEST(GridSolver, GroundStateDensityIsStationary) {
  const auto ground = WaveFunctionModel::eigen_superposition({cplx{1.0}});
  auto grid = seeded_grid(ground);
  grid->evolve_to(3.0);
  const auto psi0 = grid->psi_values(0);
  const auto psi1 = grid->psi_values(grid->snapshot_count() - 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < psi0.size(); ++i) worst = std::max(worst, std::abs(std::norm(psi1[i]) - std::norm(psi0[i])));
  EXPECT_LT(worst, 1e-8);
}

TEST(GridSolver, SingleStepAndLongRunNormConservation) {
  const auto analytic = WaveFunctionModel::equal_superposition(3, 0.4);
  GridSpec spec = default_grid();
  spec.store_stride = 1000;
  auto grid = seeded_grid(analytic, spec);
  const double n0 = grid->norm(0);
  GridSolution one = evolve_grid(*grid, 0.0, spec.dt);
  (void)one;
  auto stepper = seeded_grid(analytic, GridSpec{.n_points = 512, .dt = 1e-3, .store_stride = 1});
  stepper->evolve_to(1e-3);
  EXPECT_LT(std::abs(stepper->norm(1) - stepper->norm(0)), 1e-12);
  grid->evolve_to(10.0);  // 10^4 steps
  EXPECT_EQ(grid->snapshot_count(), 11u);
  EXPECT_LT(std::abs(grid->norm(grid->snapshot_count() - 1) - n0), 1e-10);
  EXPECT_TRUE(grid->warnings().empty());
}

TEST(GridSolver, FieldsMatchAnalyticAwayFromEdges) {
  const auto analytic = WaveFunctionModel::coherent_state(1.0);
  auto grid = seeded_grid(analytic);
  grid->evolve_to(1.0);
  const auto model = WaveFunctionModel::grid_solution(grid);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-2.0, 2.0), ut(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng);  // off-step times exercise the cubic interpolation in t
    const double x = std::cos(t) + ud(rng);
    const FieldSample g = model.eval_fields(x, t), a = analytic.eval_fields(x, t);
    ASSERT_TRUE(g.valid);
    EXPECT_NEAR(g.rho, a.rho, 1e-5);
    EXPECT_NEAR(g.grad_s, a.grad_s, 1e-5);
    EXPECT_NEAR(g.grad_log_r, a.grad_log_r, 1e-5);
    EXPECT_NEAR(g.q, a.q, 1e-5);
    EXPECT_NEAR(g.grad_q, a.grad_q, 1e-5);
    EXPECT_NEAR(g.hess_s, a.hess_s, 1e-5);
  }
}

TEST(GridSolver, SuperpositionFieldsMatchAnalytic) {
  const auto analytic = WaveFunctionModel::equal_superposition(3, 1.0);
  GridSpec spec = default_grid();
  spec.store_stride = 5;
  auto grid = seeded_grid(analytic, spec);
  grid->evolve_to(2.0);
  const auto model = WaveFunctionModel::grid_solution(grid);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-2.5, 2.5), ut(0.0, 2.0);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), t = ut(rng);
    const FieldSample a = analytic.eval_fields(x, t);
    if (a.rho < 1e-3) continue;
    const FieldSample g = model.eval_fields(x, t);
    const double scale = 1.0 + std::abs(a.grad_q) + std::abs(a.hess_s);
    EXPECT_NEAR(g.grad_s, a.grad_s, 1e-5 * scale);
    EXPECT_NEAR(g.hess_s, a.hess_s, 1e-5 * scale);
    EXPECT_NEAR(g.grad_q, a.grad_q, 1e-5 * scale);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(GridSolver, DomainAndTimeErrors) {
  const auto analytic = WaveFunctionModel::coherent_state(1.0);
  auto grid = seeded_grid(analytic);
  grid->evolve_to(0.01);
  const auto model = WaveFunctionModel::grid_solution(grid);
  try {
    model.eval_fields(11.0, 0.0);
    FAIL() << "expected OutOfDomain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfDomain);
  }
  try {
    model.eval_fields(0.0, 0.5);
    FAIL() << "expected OutOfTimeRange";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfTimeRange);
  }
  EXPECT_THROW(GridSolution(GridSpec{.n_points = 500}, {}, Potential::harmonic(1.0),
                            [](double) { return cplx{1.0}; }),
               Error);
}

TEST(GridSolver, SnapshotCsvRoundTrip) {
  const auto analytic = WaveFunctionModel::coherent_state(0.5);
  auto grid = seeded_grid(analytic, GridSpec{.x_min = -8.0, .x_max = 8.0, .n_points = 256, .dt = 1e-3});
  std::stringstream ss;
  write_snapshot_csv(ss, *grid, 0);
  EXPECT_EQ(ss.str().rfind("# bohmstab-csv v1\nx,re_psi,im_psi\n", 0), 0u);
  const SampledWaveFunction back = read_wavefunction_csv(ss);
  ASSERT_EQ(back.psi.size(), 256u);
  EXPECT_DOUBLE_EQ(back.x_min, -8.0);
  EXPECT_NEAR(back.dx, 16.0 / 256.0, 1e-15);
  const auto psi = grid->psi_values(0);
  for (std::size_t i = 0; i < psi.size(); ++i) EXPECT_EQ(back.psi[i], psi[i]);
}
