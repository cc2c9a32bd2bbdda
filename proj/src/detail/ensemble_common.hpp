#pragma once

#include <optional>

#include "bohmstab/ensemble.hpp"

namespace bohmstab::detail {

struct SamplingSetup {
  TimeSlice slice;
  std::optional<PositionSampler> sampler;
  KernelSpec momentum_kernel;
};

SamplingSetup prepare_sampling(const WaveFunctionModel& model, const NonEquilibriumSpec& neq,
                               const KernelSpec& kernel, double t, std::size_t n, bool parallel);
PhaseSpacePoint draw_particle(const SamplingSetup& setup, const NonEquilibriumSpec& neq, std::uint64_t seed,
                              std::size_t index);
Ensemble make_ensemble(const KernelSpec& kernel, const NonEquilibriumSpec& neq, double t, std::size_t n,
                       std::uint64_t seed);
void check_evolution(const Ensemble& ens, const ForceLaw& law, double t1, const IntegratorSpec& integ);
void finish_evolution(Ensemble& out, double t1, const EvolveOptions& options);

}  // namespace bohmstab::detail
