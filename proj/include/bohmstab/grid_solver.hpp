#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bohmstab/system.hpp"
#include "bohmstab/wavefunction.hpp"

namespace bohmstab {

struct GridSpec {
  enum class Boundary { Periodic, AbsorbingFree };

  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n_points = 512;
  double dt = 1e-3;
  Boundary boundary = Boundary::Periodic;
  /// Store a snapshot every `store_stride` solver steps.
  std::size_t store_stride = 1;

  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(n_points); }
  double length() const noexcept { return x_max - x_min; }
  void validate() const;
};

/// Split-step Fourier solution of i hbar psi_t = -(hbar^2/2m) psi_xx + V psi on a
/// periodic 1D grid. Stores snapshots of psi and its first five spectral
/// derivatives so that psi and its jet can be evaluated anywhere in
/// [x_min, x_max) by quintic Hermite interpolation, and at any stored time by
/// cubic interpolation between snapshots.
class GridSolution {
 public:
  static constexpr std::size_t kOrders = 6;

  GridSolution(GridSpec spec, SystemParams params, Potential potential, std::span<const cplx> psi0,
               double t0 = 0.0);
  GridSolution(GridSpec spec, SystemParams params, Potential potential,
               const std::function<cplx(double)>& psi0, double t0 = 0.0);

  /// Advances from the last stored time to `t_to`, storing snapshots along
  /// the way. Throws UnstableStep if a single step changes the grid norm by
  /// more than `kNormTolerance`.
  void evolve_to(double t_to);

  const GridSpec& spec() const noexcept { return spec_; }
  const SystemParams& params() const noexcept { return params_; }
  const Potential& potential() const noexcept { return potential_; }

  double x(std::size_t i) const noexcept { return spec_.x_min + spec_.dx() * static_cast<double>(i); }
  std::size_t size() const noexcept { return spec_.n_points; }

  std::size_t snapshot_count() const noexcept { return times_.size(); }
  double snapshot_time(std::size_t k) const { return times_.at(k); }
  double t_begin() const noexcept { return times_.front(); }
  double t_end() const noexcept { return times_.back(); }
  double snapshot_interval() const noexcept { return spec_.dt * static_cast<double>(spec_.store_stride); }

  /// psi values on the grid for snapshot k.
  std::vector<cplx> psi_values(std::size_t k) const;
  /// Sum |psi|^2 dx for snapshot k.
  double norm(std::size_t k) const;
  /// Largest relative density found within 5% of either edge, over all steps.
  double max_edge_density() const noexcept { return max_edge_density_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  /// Maximum of |psi|^2 over the initial grid.
  double initial_max_density() const noexcept { return initial_max_density_; }

  /// Jet of psi at x for snapshot k (quintic Hermite in x).
  PsiJet jet(std::size_t k, double x) const;

  /// Snapshot indices and cubic Lagrange weights for time t.
  TimeSlice::Grid time_weights(double t) const;

  static constexpr double kNormTolerance = 1e-10;
  static constexpr double kEdgeWarning = 1e-8;

 private:
  struct Plans;

  void store_snapshot(double t);
  void step();

  GridSpec spec_;
  SystemParams params_;
  Potential potential_;
  std::shared_ptr<const Plans> plans_;
  std::vector<cplx> psi_;
  std::vector<cplx> potential_phase_;
  std::vector<cplx> kinetic_phase_;
  std::vector<double> wavenumbers_;
  std::vector<double> times_;
  // per snapshot: n_points * kOrders values, interleaved [point][order]
  std::vector<std::vector<cplx>> jets_;
  double current_t_ = 0.0;
  std::size_t steps_since_store_ = 0;
  double max_edge_density_ = 0.0;
  double initial_max_density_ = 0.0;
  std::vector<std::string> warnings_;
};

/// Copy of `model` advanced from `t_from` (its last stored time) to `t_to`.
GridSolution evolve_grid(const GridSolution& model, double t_from, double t_to);

/// Writes snapshot k as CSV with columns x, re_psi, im_psi.
void write_snapshot_csv(std::ostream& out, const GridSolution& solution, std::size_t k);

struct SampledWaveFunction {
  double x_min = 0.0;
  double dx = 0.0;
  std::vector<cplx> psi;
};

/// Reads a uniformly spaced x, re_psi, im_psi CSV (comment lines starting
/// with '#' and a header row are skipped).
SampledWaveFunction read_wavefunction_csv(std::istream& in);

}  // namespace bohmstab
