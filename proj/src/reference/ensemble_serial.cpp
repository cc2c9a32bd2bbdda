#include <limits>

#include "bohmstab/ensemble.hpp"
#include "detail/ensemble_common.hpp"

namespace bohmstab::reference {

Ensemble sample_nonequilibrium(const WaveFunctionModel& model, const NonEquilibriumSpec& neq,
                               const KernelSpec& kernel, double t, std::size_t n, std::uint64_t seed) {
  const detail::SamplingSetup setup = detail::prepare_sampling(model, neq, kernel, t, n, false);
  Ensemble ens = detail::make_ensemble(kernel, neq, t, n, seed);
  for (std::size_t i = 0; i < n; ++i) ens.points[i] = detail::draw_particle(setup, neq, seed, i);
  return ens;
}

Ensemble evolve_ensemble(const Ensemble& ens, const ForceLaw& law, double t1, const IntegratorSpec& integ,
                         const EvolveOptions& options) {
  detail::check_evolution(ens, law, t1, integ);
  Ensemble out = ens;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!out.active(k)) continue;
    if (integ.method == IntegratorSpec::Method::RK4) {
      const std::size_t steps = rk4_step_count(ens.t, t1, integ.dt);
      const double h = steps ? (t1 - ens.t) / static_cast<double>(steps) : 0.0;
      PhaseSpacePoint y = out.points[k];
      for (std::size_t s = 0; s < steps; ++s) {
        const double t = ens.t + static_cast<double>(s) * h;
        try {
          y = rk4_step(law, Rk4Slices::build(law, t, h), y, h);
        } catch (const Error& e) {
          if (!ends_trajectory(e.code())) throw;
          out.truncation_times[k] = t;
          break;
        }
      }
      out.points[k] = y;
    } else {
      IntegratorSpec keep_last = integ;
      keep_last.store_stride = std::numeric_limits<std::size_t>::max();
      const Trajectory traj = integrate_trajectory(law, out.points[k].x, out.points[k].p, ens.t, t1, keep_last);
      if (traj.truncated) {
        out.truncation_times[k] = traj.truncation_time;
      } else {
        out.points[k] = traj.states.back();
      }
    }
  }
  detail::finish_evolution(out, t1, options);
  return out;
}

}  // namespace bohmstab::reference
