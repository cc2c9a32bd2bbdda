#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bohmstab/ensemble.hpp"

namespace bohmstab {

/// Rectangular partition of [x.lo, x.hi] x [p.lo, p.hi] into nx * np cells.
struct CoarseGrid {
  Interval x{-6.0, 6.0};
  Interval p{-6.0, 6.0};
  std::size_t nx = 30;
  std::size_t np = 30;

  double dx() const noexcept { return x.width() / static_cast<double>(nx); }
  double dp() const noexcept { return p.width() / static_cast<double>(np); }
  double cell_volume() const noexcept { return dx() * dp(); }
  std::size_t cells() const noexcept { return nx * np; }
  std::size_t index(std::size_t ix, std::size_t ip) const noexcept { return ix * np + ip; }
  /// Cell holding (x, p), or cells() when outside. Upper edges belong to the
  /// last cell.
  std::size_t locate(double xv, double pv) const noexcept;

  void validate() const;
  std::string describe() const;
  /// "xmin,xmax,nx,pmin,pmax,np"
  static CoarseGrid parse(std::string_view text);

  friend bool operator==(const CoarseGrid&, const CoarseGrid&) = default;
};

/// Cell-averaged density over a CoarseGrid.
struct CellField {
  CoarseGrid grid;
  std::vector<double> values;
  double out_of_range_mass = 0.0;

  double mass() const;
};

/// Empirical coarse-grained density: count / (n * dOmega). Truncated
/// particles are excluded and do not count toward n.
CellField coarse_grain(const Ensemble& ens, const CoarseGrid& grid);

/// Cell averages of the kernel equilibrium. The momentum integral over each
/// cell is done in closed form (erf or arctan); the position integral uses
/// Gauss-Legendre of the given order (8, 16 or 32), cross-checked against
/// twice that order and split into panels where the two disagree.
CellField equilibrium_cell_averages(const WaveFunctionModel& model, const KernelSpec& kernel, const CoarseGrid& grid,
                                    double t, int order = 8);

/// sum over cells of dOmega f ln(f / feq), with 0 ln 0 = 0. Throws
/// SupportMismatch when f > 0 on a cell where feq = 0, GridMismatch when the
/// fields live on different grids.
double h_function(const CellField& f, const CellField& feq);

struct BootstrapFloor {
  double floor = 0.0;
  double bias = 0.0;
  double sd = 0.0;
};

/// Noise floor of the H estimator: |bootstrap bias| + 3 bootstrap sd, from
/// multinomial resamples of the cell counts.
BootstrapFloor bootstrap_floor(const CellField& f, const CellField& feq, std::size_t n, int resamples,
                               std::uint64_t seed);

struct RelaxationSpec {
  WaveFunctionModel model;
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  NonEquilibriumSpec neq;
  std::size_t n = 200'000;
  CoarseGrid grid;
  std::vector<double> times;
  IntegratorSpec integrator{.dt = 0.01};
  std::uint64_t seed = 1;
  int bootstrap_resamples = 200;
  int quadrature_order = 8;
  double truncation_limit = 1e-3;
  /// Minimum equilibrium mass the grid has to cover at every sample time.
  double min_coverage = 1.0 - 1e-4;
};

struct HSeries {
  std::vector<double> times;
  std::vector<double> hbar;
  std::vector<double> floor;
  std::vector<double> out_of_range_mass;
  std::vector<std::size_t> truncated;
  std::size_t n_particles = 0;
  CoarseGrid grid;
};

/// "t0:t1:k" -> k + 1 equally spaced times from t0 to t1.
std::vector<double> parse_schedule(std::string_view text);

HSeries run_relaxation(const RelaxationSpec& spec);

namespace reference {
CellField coarse_grain(const Ensemble& ens, const CoarseGrid& grid);
CellField equilibrium_cell_averages(const WaveFunctionModel& model, const KernelSpec& kernel, const CoarseGrid& grid,
                                    double t, int order = 8);
}  // namespace reference

}  // namespace bohmstab
