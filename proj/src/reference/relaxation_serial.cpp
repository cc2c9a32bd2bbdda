#include "bohmstab/relaxation.hpp"
#include "detail/relaxation_common.hpp"

namespace bohmstab::reference {

CellField coarse_grain(const Ensemble& ens, const CoarseGrid& grid) {
  grid.validate();
  if (ens.points.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble is empty");
  std::vector<std::size_t> counts(grid.cells() + 1, 0);
  for (std::size_t k = 0; k < ens.size(); ++k) {
    if (ens.active(k)) ++counts[grid.locate(ens.points[k].x, ens.points[k].p)];
  }
  const std::size_t outside = counts.back();
  counts.pop_back();
  return detail::field_from_counts(grid, counts, outside);
}

CellField equilibrium_cell_averages(const WaveFunctionModel& model, const KernelSpec& kernel, const CoarseGrid& grid,
                                    double t, int order) {
  detail::check_cell_inputs(kernel, grid);
  const detail::GaussRule rule = detail::gauss_legendre(order);
  const detail::GaussRule check = detail::gauss_legendre(2 * order);
  const TimeSlice slice = model.at(t);
  std::vector<double> coarse(grid.cells());
  for (std::size_t ix = 0; ix < grid.nx; ++ix) {
    detail::converged_column(slice, kernel, grid, ix, rule, check, coarse.data() + grid.index(ix, 0));
  }
  CellField f{grid, std::move(coarse), 0.0};
  f.out_of_range_mass = 1.0 - f.mass();
  return f;
}

}  // namespace bohmstab::reference
