#include "bohmstab/integrators.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace bohmstab {

void IntegratorSpec::validate() const {
  if (!(dt > 0.0 && std::isfinite(dt))) throw Error(ErrorCode::InvalidArgument, "integrator dt must be positive");
  if (store_stride < 1) throw Error(ErrorCode::InvalidArgument, "store_stride must be >= 1");
  if (method == Method::RK45) {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
    if (!(min_dt > 0.0) || !(max_dt >= min_dt)) throw Error(ErrorCode::InvalidArgument, "need 0 < min_dt <= max_dt");
  }
}

std::string_view to_string(IntegratorSpec::Method method) {
  return method == IntegratorSpec::Method::RK4 ? "rk4" : "rk45";
}

IntegratorSpec::Method parse_integrator_method(std::string_view name) {
  if (name == "rk4") return IntegratorSpec::Method::RK4;
  if (name == "rk45") return IntegratorSpec::Method::RK45;
  throw Error(ErrorCode::InvalidArgument, "unknown integrator '" + std::string(name) + "'");
}

Rk4Slices Rk4Slices::build(const ForceLaw& law, double t, double h) {
  return {law.slice(t), law.slice(t + 0.5 * h), law.slice(t + h)};
}

PhaseSpacePoint rk4_step(const ForceLaw& law, const Rk4Slices& s, PhaseSpacePoint y, double h) {
  const PhaseSpacePoint k1 = law.rate(s.begin, y.x, y.p);
  const PhaseSpacePoint k2 = law.rate(s.mid, y.x + 0.5 * h * k1.x, y.p + 0.5 * h * k1.p);
  const PhaseSpacePoint k3 = law.rate(s.mid, y.x + 0.5 * h * k2.x, y.p + 0.5 * h * k2.p);
  const PhaseSpacePoint k4 = law.rate(s.end, y.x + h * k3.x, y.p + h * k3.p);
  PhaseSpacePoint out;
  out.x = y.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  if (law.first_order()) {
    out.p = law.params().mass * law.rate(s.end, out.x, 0.0).x;
  } else {
    out.p = y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
  }
  return out;
}

std::size_t rk4_step_count(double t0, double t1, double dt) {
  if (t1 <= t0) return 0;
  return static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
}

namespace {

void check_span(double t0, double t1) {
  if (!(t1 >= t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
    throw Error(ErrorCode::InvalidArgument, "need finite t1 >= t0");
  }
}

PhaseSpacePoint initial_state(const ForceLaw& law, double x0, double p0, double t0) {
  if (!std::isfinite(x0) || !std::isfinite(p0)) throw Error(ErrorCode::InvalidArgument, "initial point must be finite");
  PhaseSpacePoint y{x0, p0};
  const auto slice = law.slice(t0);
  const PhaseSpacePoint r = law.rate(slice, x0, p0);  // rejects starts in the node region
  if (law.first_order()) y.p = law.params().mass * r.x;
  return y;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct DpStep {
  PhaseSpacePoint y;
  double error;  // scaled, accept when <= 1
};

DpStep dopri_step(const ForceLaw& law, double t, PhaseSpacePoint y, double h, const IntegratorSpec& spec) {
  auto f = [&](double tt, double x, double p) { return law.rate(law.slice(tt), x, p); };
  const auto k1 = f(t, y.x, y.p);
  const auto k2 = f(t + c2 * h, y.x + h * a21 * k1.x, y.p + h * a21 * k1.p);
  const auto k3 = f(t + c3 * h, y.x + h * (a31 * k1.x + a32 * k2.x), y.p + h * (a31 * k1.p + a32 * k2.p));
  const auto k4 = f(t + c4 * h, y.x + h * (a41 * k1.x + a42 * k2.x + a43 * k3.x),
                    y.p + h * (a41 * k1.p + a42 * k2.p + a43 * k3.p));
  const auto k5 = f(t + c5 * h, y.x + h * (a51 * k1.x + a52 * k2.x + a53 * k3.x + a54 * k4.x),
                    y.p + h * (a51 * k1.p + a52 * k2.p + a53 * k3.p + a54 * k4.p));
  const auto k6 = f(t + h, y.x + h * (a61 * k1.x + a62 * k2.x + a63 * k3.x + a64 * k4.x + a65 * k5.x),
                    y.p + h * (a61 * k1.p + a62 * k2.p + a63 * k3.p + a64 * k4.p + a65 * k5.p));
  PhaseSpacePoint next;
  next.x = y.x + h * (b1 * k1.x + b3 * k3.x + b4 * k4.x + b5 * k5.x + b6 * k6.x);
  next.p = y.p + h * (b1 * k1.p + b3 * k3.p + b4 * k4.p + b5 * k5.p + b6 * k6.p);
  const auto k7 = f(t + h, next.x, next.p);
  const double ex = h * (e1 * k1.x + e3 * k3.x + e4 * k4.x + e5 * k5.x + e6 * k6.x + e7 * k7.x);
  double err = std::abs(ex) / (spec.atol + spec.rtol * std::max(std::abs(y.x), std::abs(next.x)));
  if (law.first_order()) {
    next.p = law.params().mass * k7.x;
  } else {
    const double ep = h * (e1 * k1.p + e3 * k3.p + e4 * k4.p + e5 * k5.p + e6 * k6.p + e7 * k7.p);
    err = std::max(err, std::abs(ep) / (spec.atol + spec.rtol * std::max(std::abs(y.p), std::abs(next.p))));
  }
  return {next, err};
}

}  // namespace

Trajectory integrate_trajectory(const ForceLaw& law, double x0, double p0, double t0, double t1,
                                const IntegratorSpec& integ) {
  integ.validate();
  check_span(t0, t1);
  Trajectory traj;
  traj.law = law.describe();
  PhaseSpacePoint y = initial_state(law, x0, p0, t0);
  traj.times.push_back(t0);
  traj.states.push_back(y);
  double t = t0;

  try {
    if (integ.method == IntegratorSpec::Method::RK4) {
      const std::size_t n = rk4_step_count(t0, t1, integ.dt);
      const double h = n ? (t1 - t0) / static_cast<double>(n) : 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        y = rk4_step(law, Rk4Slices::build(law, t, h), y, h);
        t = i == n ? t1 : t0 + static_cast<double>(i) * h;
        if (i % integ.store_stride == 0 || i == n) {
          traj.times.push_back(t);
          traj.states.push_back(y);
        }
      }
      return traj;
    }

    double h = std::min(integ.dt, integ.max_dt);
    std::size_t accepted = 0;
    while (t < t1) {
      const bool last = t + h >= t1;
      const double step = last ? t1 - t : h;
      const DpStep r = dopri_step(law, t, y, step, integ);
      const double factor = r.error == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(r.error, -0.2), 0.2, 5.0);
      if (r.error <= 1.0) {
        t = last ? t1 : t + step;
        y = r.y;
        ++accepted;
        traj.error_estimates.push_back(r.error);
        if (accepted % integ.store_stride == 0 || t >= t1) {
          traj.times.push_back(t);
          traj.states.push_back(y);
        }
      }
      h = std::min(step * factor, integ.max_dt);
      if (h < integ.min_dt && t < t1) {
        throw Error(ErrorCode::StepUnderflow, "step fell below min_dt at t=" + std::to_string(t));
      }
    }
  } catch (const Error& e) {
    if (!ends_trajectory(e.code())) throw;
    traj.truncated = true;
    traj.truncation_time = t;
    traj.truncation_reason = e.what();
  }
  return traj;
}

PhaseSpacePoint advance(const ForceLaw& law, PhaseSpacePoint y, double t0, double t1, const IntegratorSpec& integ) {
  if (integ.method == IntegratorSpec::Method::RK4) {
    check_span(t0, t1);
    const std::size_t n = rk4_step_count(t0, t1, integ.dt);
    const double h = n ? (t1 - t0) / static_cast<double>(n) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y = rk4_step(law, Rk4Slices::build(law, t0 + static_cast<double>(i) * h, h), y, h);
    }
    return y;
  }
  IntegratorSpec keep_last = integ;
  keep_last.store_stride = static_cast<std::size_t>(-1);
  const Trajectory traj = integrate_trajectory(law, y.x, y.p, t0, t1, keep_last);
  if (traj.truncated) throw Error(ErrorCode::NodeRegionEntered, traj.truncation_reason);
  return traj.states.back();
}

}  // namespace bohmstab
