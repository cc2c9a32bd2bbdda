#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bohmstab/dynamics.hpp"

namespace bohmstab {

struct IntegratorSpec {
  enum class Method { RK4, RK45 };

  Method method = Method::RK4;
  double dt = 1e-3;          // RK4 step; RK45 initial step
  double rtol = 1e-10;       // RK45 only
  double atol = 1e-12;       // RK45 only
  double min_dt = 1e-12;     // RK45 only
  double max_dt = 0.1;       // RK45 only
  std::size_t store_stride = 1;

  void validate() const;
};

std::string_view to_string(IntegratorSpec::Method method);
IntegratorSpec::Method parse_integrator_method(std::string_view name);

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseSpacePoint> states;
  std::string law;
  /// Local error estimate per accepted step (RK45); empty for RK4.
  std::vector<double> error_estimates;
  bool truncated = false;
  double truncation_time = 0.0;
  std::string truncation_reason;
};

/// Slices of psi at the three distinct RK4 stage times t, t + h/2, t + h.
/// Built once per step and shared by every particle advanced over that step.
struct Rk4Slices {
  std::optional<TimeSlice> begin, mid, end;

  static Rk4Slices build(const ForceLaw& law, double t, double h);
};

/// One classical RK4 step. For the de Broglie law p is reset to m dx/dt at
/// the end of the step.
PhaseSpacePoint rk4_step(const ForceLaw& law, const Rk4Slices& slices, PhaseSpacePoint y, double h);

/// Number of equal RK4 steps covering [t0, t1] with step <= dt.
std::size_t rk4_step_count(double t0, double t1, double dt);

/// Integrates one particle. Entering the node region stops the integration
/// and marks the trajectory truncated at the start time of the failing step;
/// StepUnderflow propagates.
Trajectory integrate_trajectory(const ForceLaw& law, double x0, double p0, double t0, double t1,
                                const IntegratorSpec& integ);

/// Final state only. Throws NodeRegionEntered instead of truncating.
PhaseSpacePoint advance(const ForceLaw& law, PhaseSpacePoint y, double t0, double t1, const IntegratorSpec& integ);

}  // namespace bohmstab
