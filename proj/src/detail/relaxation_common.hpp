#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <vector>

#include "bohmstab/relaxation.hpp"

namespace bohmstab::detail {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

GaussRule gauss_legendre(int order);

constexpr std::size_t kMaxPanels = 256;
constexpr double kCellTolerance = 1e-9;

/// Cell averages of one x-column (np values) into `out`, with the x-cell
/// split into `panels` Gauss-Legendre panels.
void column_averages(const TimeSlice& slice, const KernelSpec& kernel, const CoarseGrid& grid, std::size_t ix,
                     const GaussRule& rule, std::size_t panels, double* out);

/// column_averages with panel doubling until `rule` and `check` agree.
void converged_column(const TimeSlice& slice, const KernelSpec& kernel, const CoarseGrid& grid, std::size_t ix,
                      const GaussRule& rule, const GaussRule& check, double* out);

void check_cell_inputs(const KernelSpec& kernel, const CoarseGrid& grid);
CellField field_from_counts(const CoarseGrid& grid, const std::vector<std::size_t>& counts, std::size_t outside);

}  // namespace bohmstab::detail
