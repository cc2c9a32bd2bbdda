#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bohmstab/dynamics.hpp"
#include "bohmstab/relaxation.hpp"
#include "bohmstab/stats.hpp"

namespace bohmstab {

// Measurement probes shared by `bohmstab verify` and the acceptance suite.
namespace probe {

// Adaptive settings for ensembles that pass close to near-nodes. Fixed-step
// RK4 overshoots into the node region there at a rate proportional to dt.
inline constexpr IntegratorSpec kNearNodeIntegrator{
    .method = IntegratorSpec::Method::RK45, .dt = 0.01, .rtol = 1e-5, .atol = 1e-7, .max_dt = 0.5};


// 1 - |<psi_grid | psi_exact>| for the coherent state on the split-step grid.
double solver_overlap_defect(double alpha, double t, std::size_t points, double dt);
// |norm(end) - norm(0)| after `steps` split-step steps of a 3-mode superposition.
double solver_norm_drift(std::size_t steps, double dt);

// max |integrated - closed form| for the modified coherent-state trajectory.
double closed_form_error(double x0, double v0, double alpha, double mu, double t_end, double dt);

struct StabilityMeasure {
  double modified_max_deviation = 0.0;  // max_t |X - cos t| over all modified runs
  double bohm_min_final_deviation = 0.0;  // min over Bohm runs of |X(t_end) - cos t_end|
};
StabilityMeasure stability(double x0, const std::vector<double>& v0s, double mu, double alpha, double t_end,
                           double dt);

// max |X_modified - X_bohm| over [0, t_end] for a coherent state.
double small_mu_gap(double mu, double x0, double v0, double t_end, double dt);

// Largest relative Liouville residual over `n` random bulk points of `model`.
// `signs` is applied to the closed-form Gaussian force; the Lorentzian uses
// the flux-integral force and ignores it.
double liouville_worst(const KernelSpec& kernel, const WaveFunctionModel& model, int n, std::uint64_t seed,
                       ForceSigns signs = ForceSigns::corrected(), double min_rho = 0.05);

struct EquivarianceMeasure {
  double p_position = 0.0;
  double p_momentum = 0.0;
  std::size_t truncated = 0;
};
EquivarianceMeasure equivariance(const WaveFunctionModel& model, const KernelSpec& kernel, std::size_t n,
                                 double t_end, const IntegratorSpec& integ, std::uint64_t seed,
                                 ForceSigns signs = ForceSigns::corrected());

struct RelaxationMeasure {
  HSeries offset;
  HSeries equilibrium;
  TrendFit trend;
  double initial_margin = 0.0;  // hbar(0) / (5 floor(0))
  double decay_margin = 0.0;    // (hbar(0) - hbar(end)) / (5 floor(0))
  double equilibrium_excess = 0.0;  // max_t hbar / floor for the equilibrium start
};
RelaxationMeasure relaxation(const WaveFunctionModel& model, const KernelSpec& kernel, double delta, std::size_t n,
                             const CoarseGrid& grid, const std::vector<double>& times, const IntegratorSpec& integ,
                             std::uint64_t seed, int resamples = 200, double min_coverage = 1.0 - 1e-4);

}  // namespace probe

struct CheckResult {
  std::string name;
  std::string relation;  // "<", "<=", ">" or ">="
  double tolerance = 0.0;
  double measured = 0.0;
  bool passed = false;
  double seconds = 0.0;
  std::string error;  // set when the measurement threw
};

enum class VerifyLevel { Quick, Full };
VerifyLevel parse_verify_level(std::string_view text);

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Quick;
  std::uint64_t seed = 1;
  // Flips the sign of the S'' term in the Gaussian force, for mutation testing.
  bool tamper = false;
};

struct VerifyReport {
  VerifyLevel level = VerifyLevel::Quick;
  std::uint64_t seed = 0;
  bool tamper = false;
  std::vector<CheckResult> checks;

  bool passed() const;
  std::vector<std::string> failed() const;
  std::string to_json() const;
};

VerifyReport run_verify(const VerifyOptions& options);

}  // namespace bohmstab
