#pragma once

#include <string>
#include <string_view>

#include "bohmstab/rng.hpp"
#include "bohmstab/wavefunction.hpp"

namespace bohmstab {

/// Momentum-spread kernel of the phase-space equilibrium
///   f(x, p) = rho(x) K(p - S'(x)).
/// Gaussian: K(u) = exp(-u^2/mu) / sqrt(pi mu)   (variance mu/2)
/// Lorentzian: K(u) = (mu/pi) / (u^2 + mu^2)      (Cauchy, scale mu)
/// Dirac: K(u) = delta(u), the mu -> 0 limit; never evaluated as a number.
struct KernelSpec {
  enum class Kind { Gaussian, Lorentzian, Dirac };

  Kind kind = Kind::Gaussian;
  double mu = 1.0;

  static KernelSpec gaussian(double mu);
  static KernelSpec lorentzian(double mu);
  static KernelSpec dirac() { return {Kind::Dirac, 0.0}; }

  void validate() const;
  bool is_dirac() const noexcept { return kind == Kind::Dirac; }

  /// K(u); throws DiracDensityRequest for the Dirac kernel.
  double profile(double u) const;
  /// dK/du.
  double profile_derivative(double u) const;
};

std::string_view to_string(KernelSpec::Kind kind);
/// "gaussian" | "lorentzian" | "dirac"
KernelSpec::Kind parse_kernel_kind(std::string_view name);
KernelSpec make_kernel(std::string_view name, double mu);

/// Normalized phase-space density rho(x) K(p - S'(x)); integrates over p to rho.
double equilibrium_density(const KernelSpec& spec, const FieldSample& fields, double p);

struct QuadratureSpec {
  int positions = 50;
  /// Half-width of the symmetric window around S' for the principal-value
  /// part of the current integral.
  double pv_half_range = 1e3;
  double tolerance = 1e-14;
};

struct MarginalReport {
  double density_error = 0.0;  // max_x |int f dp - rho|
  double current_error = 0.0;  // max_x |int (p/m) f dp - rho S'/m|
  int positions_checked = 0;
};

/// Checks int f dp = |psi|^2 and int (p/m) f dp = |psi|^2 S'/m at positions
/// spread over the model's support at time t. The current is split as
/// S' f + u f: the first piece is absolutely integrable and is integrated over
/// the whole line, the second is odd in u and is taken as a symmetric
/// principal value over |u| <= pv_half_range (needed for the Lorentzian,
/// whose first moment does not exist). Truncating the S' f piece instead would
/// leave an error ~ rho |S'| 2 mu / (pi L m) that decays only like 1/L.
MarginalReport check_marginals(const KernelSpec& spec, const WaveFunctionModel& model, double t,
                               const QuadratureSpec& quadrature = {});

/// Draws p from the conditional kernel at the given fields.
double sample_conditional_momentum(const KernelSpec& spec, const FieldSample& fields, RandomStream& rng);

}  // namespace bohmstab
