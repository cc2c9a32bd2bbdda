#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bohmstab/dynamics.hpp"
#include "bohmstab/integrators.hpp"
#include "bohmstab/kernels.hpp"
#include "bohmstab/wavefunction.hpp"

namespace bohmstab {

/// Inverse-CDF sampler for a 1D density tabulated on 2^14 intervals.
/// The CDF is accumulated with Simpson's rule and interpolated by monotone
/// cubic Hermite segments whose slopes are the density itself.
class PositionSampler {
 public:
  static constexpr std::size_t kIntervals = std::size_t{1} << 14;
  /// Largest tolerated |Simpson - trapezoid| CDF discrepancy, relative to the
  /// total mass, before the grid is declared too coarse.
  static constexpr double kCoarseTolerance = 1e-6;

  /// `density` need not be normalized. Throws SamplerGridTooCoarse and
  /// InvalidArgument (zero or non-finite mass).
  PositionSampler(const std::function<double(double)>& density, Interval domain, bool parallel = true);

  double draw(double u) const;
  double cdf(double x) const;
  double total_mass() const noexcept { return mass_; }
  Interval domain() const noexcept { return domain_; }

 private:
  double hermite(std::size_t i, double x) const;

  Interval domain_;
  double dx_ = 0.0;
  double mass_ = 0.0;
  std::vector<double> cdf_;    // normalized, kIntervals + 1 values
  std::vector<double> slope_;  // limited dC/dx at the nodes
};

/// Off-equilibrium initial conditions.
struct NonEquilibriumSpec {
  enum class Position { BornRule, Custom };
  enum class Momentum { KernelAtGradS, Offset, WidthMismatch, Independent };

  Position position = Position::BornRule;
  std::function<double(double)> custom_density;  // unnormalized
  Interval custom_domain{};
  std::string custom_label;

  Momentum momentum = Momentum::KernelAtGradS;
  double delta = 0.0;       // Offset
  double mu_actual = 0.0;   // WidthMismatch
  double mean = 0.0;        // Independent
  double sd = 1.0;          // Independent

  static NonEquilibriumSpec equilibrium() { return {}; }
  static NonEquilibriumSpec offset(double delta);
  static NonEquilibriumSpec width_mismatch(double mu_actual);
  static NonEquilibriumSpec independent(double mean, double sd);
  NonEquilibriumSpec& with_positions(std::function<double(double)> density, Interval domain, std::string label);

  void validate() const;
  std::string describe() const;
};

/// Parses "born", "offset:<d>", "width:<mu>", "independent:<mean>,<sd>".
/// "custom:<file>" is handled by the caller, which owns file I/O.
NonEquilibriumSpec parse_nonequilibrium(std::string_view text);

struct Ensemble {
  std::vector<PhaseSpacePoint> points;
  /// NaN while active; time of the failing step once censored.
  std::vector<double> truncation_times;
  double t = 0.0;
  std::string sampler;
  std::uint64_t seed = 0;
  std::size_t truncated_count = 0;

  std::size_t size() const noexcept { return points.size(); }
  bool active(std::size_t i) const { return std::isnan(truncation_times[i]); }
  std::vector<PhaseSpacePoint> active_points() const;
};

Ensemble sample_equilibrium(const WaveFunctionModel& model, const KernelSpec& kernel, double t, std::size_t n,
                            std::uint64_t seed);

Ensemble sample_nonequilibrium(const WaveFunctionModel& model, const NonEquilibriumSpec& neq,
                               const KernelSpec& kernel, double t, std::size_t n, std::uint64_t seed);

struct EvolveOptions {
  /// Maximum censored fraction before TruncationThreshold is raised.
  double truncation_limit = 1e-3;
};

/// Advances every active particle to t1 under `law`. RK4 runs time-outer:
/// the psi slices for each step are built once and shared by all particles.
Ensemble evolve_ensemble(const Ensemble& ens, const ForceLaw& law, double t1, const IntegratorSpec& integ,
                         const EvolveOptions& options = {});

/// Serial reference versions used to validate the parallel kernels. Each
/// particle is integrated on its own, building its psi slices per step.
namespace reference {
Ensemble sample_nonequilibrium(const WaveFunctionModel& model, const NonEquilibriumSpec& neq,
                               const KernelSpec& kernel, double t, std::size_t n, std::uint64_t seed);
Ensemble evolve_ensemble(const Ensemble& ens, const ForceLaw& law, double t1, const IntegratorSpec& integ,
                         const EvolveOptions& options = {});
}  // namespace reference

struct EnsembleSummary {
  std::size_t active = 0;
  double mean_x = 0.0, var_x = 0.0, mean_p = 0.0, var_p = 0.0;
  double median_x = 0.0, iqr_x = 0.0, median_p = 0.0, iqr_p = 0.0;
};

EnsembleSummary summarize(const Ensemble& ens);

/// (p - S'(x, t)) scaled by the kernel's natural width: sqrt(mu/2) for the
/// Gaussian, mu for the Lorentzian. Active particles only.
std::vector<double> momentum_pulls(const Ensemble& ens, const WaveFunctionModel& model, const KernelSpec& kernel);

}  // namespace bohmstab
