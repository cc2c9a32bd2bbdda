#pragma once

#include <functional>
#include <optional>
#include <string>

#include "bohmstab/kernels.hpp"
#include "bohmstab/wavefunction.hpp"

namespace bohmstab {

struct PhaseSpacePoint {
  double x = 0.0;
  double p = 0.0;
};

/// Signs of the R'/R and Hessian terms of the kernel-smoothed quantum force.
/// `corrected()` is the form that keeps the Gaussian equilibrium stationary;
/// `as_printed()` flips both terms and is kept only to demonstrate that the
/// Liouville residual then fails.
struct ForceSigns {
  double grad_log_r = 1.0;
  double hessian = 1.0;

  static constexpr ForceSigns corrected() { return {1.0, 1.0}; }
  static constexpr ForceSigns as_printed() { return {-1.0, -1.0}; }
};

/// Total force -V' + F_Q for the Gaussian kernel in one dimension:
///   F = -V' - Q' + s1 (mu/m) R'/R + s2 (S''/m) (p - S')
/// with (s1, s2) = (+1, +1) for the corrected form.
double modified_force(const KernelSpec& spec, const FieldSample& fields, double x, double p,
                      const SystemParams& params, const Potential& potential,
                      ForceSigns signs = ForceSigns::corrected());

/// Closed form of the Lorentzian force obtained by the flux construction with
/// the anchor at p = S' (see FluxAnchor::EquilibriumMomentum):
///   F = -V' - Q' + (S''/m) u - (R'/R) (u^2 + mu^2) ln(1 + u^2/mu^2) / m,  u = p - S'.
double lorentzian_force_closed_form(const KernelSpec& spec, const FieldSample& fields, double x, double p,
                                    const SystemParams& params, const Potential& potential);

/// Where the momentum flux F f is pinned when integrating the Liouville
/// equation over p.
enum class FluxAnchor {
  /// F f -> 0 as p -> -infinity. Exists only when the kernel's second moment
  /// is finite; throws TailDivergence otherwise.
  LowerTail,
  /// F(x, S') = -V' - Q' at the equilibrium momentum. For the Gaussian this
  /// differs from LowerTail by a p-dependent term that integrates to zero; for
  /// the Lorentzian it is the minimal subtraction of the logarithmically
  /// divergent current term.
  EquilibriumMomentum,
  /// LowerTail for the Gaussian, EquilibriumMomentum for the Lorentzian.
  Automatic,
};

struct FluxIntegralOptions {
  FluxAnchor anchor = FluxAnchor::Automatic;
  double tolerance = 1e-13;
};

/// Force that makes the kernel equilibrium satisfy the phase-space Liouville
/// equation, built by quadrature:
///   F(x, p, t) = [flux_anchor - int_{anchor}^{p} (d_t f + (p'/m) d_x f) dp'] / f(x, p, t)
/// Time and space derivatives of f come from the closed-form kernel
/// derivative, the continuity equation and the quantum Hamilton-Jacobi
/// equation, evaluated from the model's fields.
double flux_integral_force(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p, double t,
                           const FluxIntegralOptions& options = {});

/// flux_integral_force restricted to the Lorentzian kernel.
double lorentzian_force(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p, double t,
                        const FluxIntegralOptions& options = {});

/// -V' - Q', independent of p.
double bohm_force(const FieldSample& fields, double x, const Potential& potential);

/// S'/m.
double debroglie_velocity(const FieldSample& fields, const SystemParams& params);

/// Law of motion for a single particle.
class ForceLaw {
 public:
  enum class Kind { Modified, Bohm, Classical, DeBroglie };

  static ForceLaw modified(WaveFunctionModel model, KernelSpec kernel, ForceSigns signs = ForceSigns::corrected());
  static ForceLaw bohm(WaveFunctionModel model);
  static ForceLaw classical(SystemParams params, Potential potential);
  static ForceLaw de_broglie(WaveFunctionModel model);

  Kind kind() const noexcept { return kind_; }
  bool first_order() const noexcept { return kind_ == Kind::DeBroglie; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const SystemParams& params() const noexcept { return params_; }
  const Potential& potential() const noexcept { return potential_; }
  const std::optional<WaveFunctionModel>& model() const noexcept { return model_; }
  ForceSigns signs() const noexcept { return signs_; }
  std::string describe() const;

  /// psi frozen at t; empty for the classical law.
  std::optional<TimeSlice> slice(double t) const;

  /// Phase-space velocity (dx/dt, dp/dt). For the de Broglie law dp/dt is
  /// zero and p is re-synchronized to S' after each step. Throws
  /// NodeRegionEntered when x lies in the node-exclusion region.
  PhaseSpacePoint rate(const std::optional<TimeSlice>& slice, double x, double p) const;

  /// Force at (x, p) for given fields (second-order laws only).
  double force(const FieldSample& fields, double x, double p) const;

 private:
  ForceLaw(Kind kind, SystemParams params, Potential potential) : kind_(kind), params_(params), potential_(potential) {}

  Kind kind_;
  SystemParams params_;
  Potential potential_;
  std::optional<WaveFunctionModel> model_;
  KernelSpec kernel_ = KernelSpec::dirac();
  ForceSigns signs_ = ForceSigns::corrected();
};

std::string_view to_string(ForceLaw::Kind kind);

/// Divergence d(dx/dt)/dx + d(dp/dt)/dp of the phase-space flow. Zero for the
/// Bohm and classical laws; S''/m for the Gaussian modified law; for the de
/// Broglie law the configuration-space divergence S''/m.
double flow_divergence(const ForceLaw& law, const FieldSample& fields, double p);

/// Exact coherent-state trajectory of the Gaussian modified dynamics
/// (hbar = m = k = 1):
///   X(t) = V0 sin(sqrt(mu) t)/sqrt(mu) + cos(sqrt(mu) t)(X0 - alpha) + alpha cos t,
/// with the mu = 0 limit X0 + V0 t + alpha (cos t - 1).
double coherent_closed_form(double x0, double v0, double alpha, double mu, double t);

struct LiouvilleResidual {
  double residual = 0.0;
  double density = 0.0;
  double relative() const { return std::abs(residual) / density; }
};

using DensityFn = std::function<double(double x, double p, double t)>;
using ForceFn = std::function<double(double x, double p, double t)>;

/// d_t f + (p/m) d_x f + d_p(F f) at (x, p, t) by five-point central
/// differences of step h in each variable.
LiouvilleResidual liouville_residual(const DensityFn& density, const ForceFn& force, double mass, double x, double p,
                                     double t, double h);

enum class ForceRoute { Corrected, AsPrinted, FluxIntegral };

/// Residual of the kernel equilibrium under the chosen force. Throws
/// InvalidNeighborhood if any stencil point is in the node region.
LiouvilleResidual liouville_residual(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p,
                                     double t, double h, ForceSigns signs);
LiouvilleResidual liouville_residual(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p,
                                     double t, double h, ForceRoute route);

}  // namespace bohmstab
