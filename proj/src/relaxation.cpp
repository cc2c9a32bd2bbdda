#include "bohmstab/relaxation.hpp"


#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bohmstab/rng.hpp"
#include "detail/relaxation_common.hpp"

namespace bohmstab {

std::size_t CoarseGrid::locate(double xv, double pv) const noexcept {
  if (!(xv >= x.lo && xv <= x.hi && pv >= p.lo && pv <= p.hi)) return cells();
  const auto ix = std::min(static_cast<std::size_t>((xv - x.lo) / dx()), nx - 1);
  const auto ip = std::min(static_cast<std::size_t>((pv - p.lo) / dp()), np - 1);
  return index(ix, ip);
}

void CoarseGrid::validate() const {
  if (!(x.hi > x.lo) || !(p.hi > p.lo)) throw Error(ErrorCode::InvalidArgument, "coarse grid ranges are empty");
  if (nx < 4 || np < 4) throw Error(ErrorCode::InvalidArgument, "coarse grid needs at least 4 cells per axis");
}

std::string CoarseGrid::describe() const {
  std::ostringstream out;
  out << x.lo << "," << x.hi << "," << nx << "," << p.lo << "," << p.hi << "," << np;
  return out.str();
}

CoarseGrid CoarseGrid::parse(std::string_view text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view item = text.substr(start, comma - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorCode::InvalidArgument, "bad grid field '" + std::string(item) + "'");
    }
    v.push_back(value);
    start = comma + 1;
  }
  if (v.size() != 6) throw Error(ErrorCode::InvalidArgument, "grid must be xmin,xmax,nx,pmin,pmax,np");
  auto count = [](double c) {
    if (c != std::floor(c) || c < 1) throw Error(ErrorCode::InvalidArgument, "cell counts must be positive integers");
    return static_cast<std::size_t>(c);
  };
  CoarseGrid g{{v[0], v[1]}, {v[3], v[4]}, count(v[2]), count(v[5])};
  g.validate();
  return g;
}

double CellField::mass() const {
  return std::accumulate(values.begin(), values.end(), 0.0) * grid.cell_volume();
}

namespace detail {

CellField field_from_counts(const CoarseGrid& grid, const std::vector<std::size_t>& counts, std::size_t outside) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), outside);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "no active particles to coarse-grain");
  CellField f{grid, std::vector<double>(grid.cells()), 0.0};
  const double scale = 1.0 / (static_cast<double>(n) * grid.cell_volume());
  for (std::size_t c = 0; c < counts.size(); ++c) f.values[c] = static_cast<double>(counts[c]) * scale;
  f.out_of_range_mass = static_cast<double>(outside) / static_cast<double>(n);
  return f;
}

namespace {

template <int N>
void gauss_rule(std::vector<double>& nodes, std::vector<double>& weights) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& a = Rule::abscissa();
  const auto& w = Rule::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    nodes.push_back(a[i]);
    weights.push_back(w[i]);
    if (a[i] != 0.0) {
      nodes.push_back(-a[i]);
      weights.push_back(w[i]);
    }
  }
}

double kernel_cell_mass(const KernelSpec& kernel, double center, double lo, double hi) {
  if (kernel.kind == KernelSpec::Kind::Gaussian) {
    const double s = std::sqrt(kernel.mu);
    return 0.5 * (std::erf((hi - center) / s) - std::erf((lo - center) / s));
  }
  return (std::atan((hi - center) / kernel.mu) - std::atan((lo - center) / kernel.mu)) / std::numbers::pi;
}

}  // namespace

GaussRule gauss_legendre(int order) {
  GaussRule rule;
  switch (order) {
    case 8: gauss_rule<8>(rule.nodes, rule.weights); break;
    case 16: gauss_rule<16>(rule.nodes, rule.weights); break;
    case 32: gauss_rule<32>(rule.nodes, rule.weights); break;
    case 64: gauss_rule<64>(rule.nodes, rule.weights); break;
    default: throw Error(ErrorCode::InvalidArgument, "quadrature order must be 8, 16 or 32");
  }
  return rule;
}

void column_averages(const TimeSlice& slice, const KernelSpec& kernel, const CoarseGrid& grid, std::size_t ix,
                     const GaussRule& rule, std::size_t panels, double* out) {
  const double width = grid.dx() / static_cast<double>(panels);
  const double half = 0.5 * width;
  const double left = grid.x.lo + static_cast<double>(ix) * grid.dx();
  std::fill(out, out + grid.np, 0.0);
  for (std::size_t panel = 0; panel < panels; ++panel) {
    const double center = left + (static_cast<double>(panel) + 0.5) * width;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const FieldSample f = slice.fields(center + half * rule.nodes[k]);
      if (!f.valid) continue;  // density below the node threshold
      const double w = rule.weights[k] * half * f.rho;
      for (std::size_t ip = 0; ip < grid.np; ++ip) {
        const double lo = grid.p.lo + static_cast<double>(ip) * grid.dp();
        out[ip] += w * kernel_cell_mass(kernel, f.grad_s, lo, lo + grid.dp());
      }
    }
  }
  for (std::size_t ip = 0; ip < grid.np; ++ip) out[ip] /= grid.cell_volume();
}

void converged_column(const TimeSlice& slice, const KernelSpec& kernel, const CoarseGrid& grid, std::size_t ix,
                      const GaussRule& rule, const GaussRule& check, double* out) {
  // Near-nodes make S' swing across a whole momentum cell within one x-cell;
  // such columns are split into panels until the order-doubled rule agrees.
  std::vector<double> fine(grid.np);
  for (std::size_t panels = 1; panels <= kMaxPanels; panels *= 2) {
    column_averages(slice, kernel, grid, ix, rule, panels, out);
    column_averages(slice, kernel, grid, ix, check, panels, fine.data());
    double scale = 1.0, diff = 0.0;
    for (std::size_t ip = 0; ip < grid.np; ++ip) {
      scale = std::max(scale, std::abs(fine[ip]));
      diff = std::max(diff, std::abs(out[ip] - fine[ip]));
    }
    if (diff <= kCellTolerance * scale) return;
  }
  throw Error(ErrorCode::QuadratureNotConverged, "cell average changes when the quadrature order doubles");
}

void check_cell_inputs(const KernelSpec& kernel, const CoarseGrid& grid) {
  if (kernel.is_dirac()) {
    throw Error(ErrorCode::DiracKernel, "the Dirac equilibrium has zero phase-space volume; cell averages undefined");
  }
  kernel.validate();
  grid.validate();
}

}  // namespace detail

CellField coarse_grain(const Ensemble& ens, const CoarseGrid& grid) {
  grid.validate();
  if (ens.points.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble is empty");
  const std::size_t cells = grid.cells();
  std::vector<std::size_t> counts(cells + 1, 0);
  const auto n = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel
  {
    std::vector<std::size_t> local(cells + 1, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (ens.active(k)) ++local[grid.locate(ens.points[k].x, ens.points[k].p)];
    }
#pragma omp critical(bohmstab_coarse_grain_merge)
    for (std::size_t c = 0; c <= cells; ++c) counts[c] += local[c];
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
  const auto nx = static_cast<std::ptrdiff_t>(grid.nx);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ix = 0; ix < nx; ++ix) {
    const auto i = static_cast<std::size_t>(ix);
    detail::converged_column(slice, kernel, grid, i, rule, check, coarse.data() + grid.index(i, 0));
  }
  CellField f{grid, std::move(coarse), 0.0};
  f.out_of_range_mass = 1.0 - f.mass();
  return f;
}

double h_function(const CellField& f, const CellField& feq) {
  if (!(f.grid == feq.grid) || f.values.size() != feq.values.size()) {
    throw Error(ErrorCode::GridMismatch, "cell fields live on different grids");
  }
  const double dv = f.grid.cell_volume();
  double h = 0.0, orphan = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) {
    const double a = f.values[c];
    if (a <= 0.0) continue;
    const double b = feq.values[c];
    if (!(b > 0.0)) {
      orphan += a * dv;
      continue;
    }
    h += dv * a * std::log(a / b);
  }
  if (orphan > 0.0) {
    std::ostringstream msg;
    msg << "mass " << orphan << " sits on cells where the equilibrium vanishes";
    throw Error(ErrorCode::SupportMismatch, msg.str());
  }
  return h;
}

BootstrapFloor bootstrap_floor(const CellField& f, const CellField& feq, std::size_t n, int resamples,
                               std::uint64_t seed) {
  if (resamples < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least 2 resamples");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "bootstrap needs particles");
  const double h0 = h_function(f, feq);
  const double dv = f.grid.cell_volume();
  std::vector<double> prob(f.values.size() + 1);
  for (std::size_t c = 0; c < f.values.size(); ++c) prob[c] = f.values[c] * dv;
  prob.back() = f.out_of_range_mass;

  std::vector<double> hs(static_cast<std::size_t>(resamples));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < resamples; ++b) {
    // Stream indices far from particle indices used by the samplers.
    RandomStream rng(seed, (std::uint64_t{1} << 62) + static_cast<std::uint64_t>(b));
    std::vector<std::size_t> counts(prob.size(), 0);
    std::size_t remaining = n;
    double rest = 1.0;
    for (std::size_t c = 0; c < prob.size() && remaining > 0; ++c) {
      if (prob[c] <= 0.0) continue;
      const double q = rest > 0.0 ? std::min(1.0, prob[c] / rest) : 1.0;
      const std::size_t k = c + 1 == prob.size() ? remaining
                                                 : std::binomial_distribution<std::size_t>(remaining, q)(rng.engine());
      counts[c] = k;
      remaining -= k;
      rest -= prob[c];
    }
    counts.back() += remaining;  // rounding leftovers
    const std::size_t outside = counts.back();
    counts.pop_back();
    hs[static_cast<std::size_t>(b)] = h_function(detail::field_from_counts(f.grid, counts, outside), feq);
  }
  BootstrapFloor out;
  const double m = std::accumulate(hs.begin(), hs.end(), 0.0) / static_cast<double>(resamples);
  double ss = 0.0;
  for (double v : hs) ss += (v - m) * (v - m);
  out.bias = m - h0;
  out.sd = std::sqrt(ss / static_cast<double>(resamples - 1));
  out.floor = std::abs(out.bias) + 3.0 * out.sd;
  return out;
}

std::vector<double> parse_schedule(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t colon = std::min(text.find(':', start), text.size());
    const std::string_view item = text.substr(start, colon - start);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorCode::InvalidArgument, "bad schedule field '" + std::string(item) + "'");
    }
    parts.push_back(v);
    start = colon + 1;
  }
  if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2]) || !(parts[1] > parts[0])) {
    throw Error(ErrorCode::InvalidArgument, "schedule must be t0:t1:k with t1 > t0 and integer k >= 1");
  }
  const auto k = static_cast<std::size_t>(parts[2]);
  std::vector<double> times(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    times[i] = i == k ? parts[1] : parts[0] + (parts[1] - parts[0]) * static_cast<double>(i) / static_cast<double>(k);
  }
  return times;
}

HSeries run_relaxation(const RelaxationSpec& spec) {
  if (spec.kernel.is_dirac()) {
    throw Error(ErrorCode::DiracKernel,
                "the Dirac equilibrium is supported on a set of zero phase-space volume; H is undefined");
  }
  spec.grid.validate();
  if (spec.times.empty()) throw Error(ErrorCode::InvalidArgument, "relaxation needs sample times");
  for (std::size_t i = 1; i < spec.times.size(); ++i) {
    if (!(spec.times[i] > spec.times[i - 1])) throw Error(ErrorCode::InvalidArgument, "times must increase");
  }
  const ForceLaw law = ForceLaw::modified(spec.model, spec.kernel);
  HSeries series;
  series.grid = spec.grid;
  series.n_particles = spec.n;

  Ensemble ens = sample_nonequilibrium(spec.model, spec.neq, spec.kernel, spec.times.front(), spec.n, spec.seed);
  for (std::size_t i = 0; i < spec.times.size(); ++i) {
    const double t = spec.times[i];
    if (i > 0) ens = evolve_ensemble(ens, law, t, spec.integrator, {.truncation_limit = spec.truncation_limit});
    const CellField feq = equilibrium_cell_averages(spec.model, spec.kernel, spec.grid, t, spec.quadrature_order);
    if (feq.mass() < spec.min_coverage) {
      std::ostringstream msg;
      msg << "grid covers only " << feq.mass() << " of the equilibrium mass at t=" << t;
      throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    const CellField f = coarse_grain(ens, spec.grid);
    const std::size_t active = ens.size() - ens.truncated_count;
    series.times.push_back(t);
    series.hbar.push_back(h_function(f, feq));
    series.floor.push_back(bootstrap_floor(f, feq, active, spec.bootstrap_resamples, spec.seed + i).floor);
    series.out_of_range_mass.push_back(f.out_of_range_mass);
    series.truncated.push_back(ens.truncated_count);
  }
  return series;
}

}  // namespace bohmstab
