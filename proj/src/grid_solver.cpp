#include "bohmstab/grid_solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "bohmstab/csv.hpp"

namespace bohmstab {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

double grid_norm(const std::vector<cplx>& psi, double dx) {
  double sum = 0.0;
  for (const cplx& v : psi) sum += std::norm(v);
  return sum * dx;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

/// Unaligned in-place plans for one transform size, shared by copies of a
/// solution. fftw_execute_dft is thread-safe; only planning is not.
struct GridSolution::Plans {
  explicit Plans(std::size_t n) {
    std::vector<cplx> scratch(n);
    const int size = static_cast<int>(n);
    forward = fftw_plan_dft_1d(size, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD,
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward = fftw_plan_dft_1d(size, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~Plans() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;

  void run_forward(std::vector<cplx>& buf) const { fftw_execute_dft(forward, as_fftw(buf.data()), as_fftw(buf.data())); }
  void run_backward(std::vector<cplx>& buf) const {
    fftw_execute_dft(backward, as_fftw(buf.data()), as_fftw(buf.data()));
  }

  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};


void GridSpec::validate() const {
  if (!(x_max > x_min)) throw Error(ErrorCode::InvalidArgument, "grid needs x_max > x_min");
  if (!is_power_of_two(n_points)) throw Error(ErrorCode::InvalidArgument, "grid size must be a power of two");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid time step must be positive");
  if (store_stride < 1) throw Error(ErrorCode::InvalidArgument, "store stride must be >= 1");
}

GridSolution::GridSolution(GridSpec spec, SystemParams params, Potential potential, std::span<const cplx> psi0,
                           double t0)
    : spec_(spec), params_(params), potential_(potential), current_t_(t0) {
  spec_.validate();
  params_.validate();
  if (psi0.size() != spec_.n_points) {
    throw Error(ErrorCode::InvalidArgument, "initial state size does not match the grid");
  }
  psi_.assign(psi0.begin(), psi0.end());
  plans_ = std::make_shared<const Plans>(spec_.n_points);

  const std::size_t n = spec_.n_points;
  const double dx = spec_.dx();
  wavenumbers_.resize(n);
  const double k0 = 2.0 * std::numbers::pi / spec_.length();
  for (std::size_t j = 0; j < n; ++j) {
    const auto signed_j = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    wavenumbers_[j] = k0 * signed_j;
  }

  const double half_dt = 0.5 * spec_.dt;
  potential_phase_.resize(n);
  kinetic_phase_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    potential_phase_[i] = std::polar(1.0, -potential_.value(x(i)) * half_dt / params_.hbar);
    const double k = wavenumbers_[i];
    kinetic_phase_[i] = std::polar(1.0, -params_.hbar * k * k * spec_.dt / (2.0 * params_.mass));
  }

  for (const cplx& v : psi_) initial_max_density_ = std::max(initial_max_density_, std::norm(v));
  if (!(grid_norm(psi_, dx) > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial state has zero norm");
  store_snapshot(t0);
}

GridSolution::GridSolution(GridSpec spec, SystemParams params, Potential potential,
                           const std::function<cplx(double)>& psi0, double t0)
    : GridSolution(
          spec, params, potential,
          [&] {
            spec.validate();
            std::vector<cplx> values(spec.n_points);
            for (std::size_t i = 0; i < spec.n_points; ++i) {
              values[i] = psi0(spec.x_min + spec.dx() * static_cast<double>(i));
            }
            return values;
          }(),
          t0) {}

void GridSolution::step() {
  const std::size_t n = psi_.size();
  const double dx = spec_.dx();
  const double before = grid_norm(psi_, dx);

  std::vector<cplx>& buf = psi_;
  for (std::size_t i = 0; i < n; ++i) buf[i] *= potential_phase_[i];
  plans_->run_forward(buf);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] *= kinetic_phase_[i] * scale;
  plans_->run_backward(buf);
  for (std::size_t i = 0; i < n; ++i) buf[i] *= potential_phase_[i];

  const double after = grid_norm(psi_, dx);
  if (!(std::abs(after - before) <= kNormTolerance * before)) {
    throw Error(ErrorCode::UnstableStep, "grid norm changed by " + std::to_string(after - before) + " in one step");
  }
  current_t_ += spec_.dt;

  double peak = 0.0;
  for (const cplx& v : psi_) peak = std::max(peak, std::norm(v));
  const std::size_t edge = std::max<std::size_t>(1, n / 20);
  double edge_peak = 0.0;
  for (std::size_t i = 0; i < edge; ++i) {
    edge_peak = std::max({edge_peak, std::norm(psi_[i]), std::norm(psi_[n - 1 - i])});
  }
  const double relative = edge_peak / peak;
  if (relative > kEdgeWarning && max_edge_density_ <= kEdgeWarning) {
    std::ostringstream msg;
    msg << "edge density " << relative << " at t=" << current_t_ << " exceeds " << kEdgeWarning
        << "; widen the domain";
    warnings_.push_back(msg.str());
  }
  max_edge_density_ = std::max(max_edge_density_, relative);
}

void GridSolution::store_snapshot(double t) {
  const std::size_t n = spec_.n_points;
  std::vector<cplx> jets(n * kOrders);
  std::vector<cplx> spectrum = psi_;
  std::vector<cplx> work(n);
  plans_->run_forward(spectrum);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) jets[i * kOrders] = psi_[i];
  for (std::size_t order = 1; order < kOrders; ++order) {
    for (std::size_t j = 0; j < n; ++j) {
      // the Nyquist mode has no well-defined derivative on a periodic grid
      if (j == n / 2) {
        work[j] = 0.0;
        continue;
      }
      work[j] = spectrum[j] * std::pow(cplx{0.0, wavenumbers_[j]}, static_cast<int>(order)) * scale;
    }
    plans_->run_backward(work);
    for (std::size_t i = 0; i < n; ++i) jets[i * kOrders + order] = work[i];
  }
  times_.push_back(t);
  jets_.push_back(std::move(jets));
}

void GridSolution::evolve_to(double t_to) {
  if (!(t_to > current_t_)) throw Error(ErrorCode::InvalidArgument, "evolve_to needs a later time");
  const auto steps = static_cast<std::size_t>(std::llround((t_to - current_t_) / spec_.dt));
  const double t_start = current_t_;
  for (std::size_t s = 0; s < steps; ++s) {
    step();
    current_t_ = t_start + spec_.dt * static_cast<double>(s + 1);
    if (++steps_since_store_ == spec_.store_stride) {
      store_snapshot(current_t_);
      steps_since_store_ = 0;
    }
  }
}

std::vector<cplx> GridSolution::psi_values(std::size_t k) const {
  const auto& jets = jets_.at(k);
  std::vector<cplx> out(spec_.n_points);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = jets[i * kOrders];
  return out;
}

double GridSolution::norm(std::size_t k) const { return grid_norm(psi_values(k), spec_.dx()); }

PsiJet GridSolution::jet(std::size_t k, double xq) const {
  if (!(xq >= spec_.x_min && xq <= spec_.x_max)) {
    throw Error(ErrorCode::OutOfDomain, "x=" + std::to_string(xq) + " outside grid domain");
  }
  const double h = spec_.dx();
  const double u = (xq - spec_.x_min) / h;
  const std::size_t n = spec_.n_points;
  auto i0 = static_cast<std::size_t>(u);
  if (i0 >= n) i0 = n - 1;
  const std::size_t i1 = (i0 + 1) % n;
  const double s = u - static_cast<double>(i0);

  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
  const double h1 = (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5) * h;
  const double h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5) * h * h;
  const double h3 = 0.5 * (s3 - 2.0 * s4 + s5) * h * h;
  const double h4 = (-4.0 * s3 + 7.0 * s4 - 3.0 * s5) * h;
  const double h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

  const cplx* a = jets_[k].data() + i0 * kOrders;
  const cplx* b = jets_[k].data() + i1 * kOrders;
  PsiJet out;
  for (std::size_t d = 0; d < 4; ++d) {
    out.d[d] = h0 * a[d] + h1 * a[d + 1] + h2 * a[d + 2] + h3 * b[d + 2] + h4 * b[d + 1] + h5 * b[d];
  }
  return out;
}

TimeSlice::Grid GridSolution::time_weights(double t) const {
  const double t0 = times_.front();
  const double t1 = times_.back();
  const double slack = 1e-9 * snapshot_interval();
  if (!(t >= t0 - slack && t <= t1 + slack)) {
    throw Error(ErrorCode::OutOfTimeRange, "t=" + std::to_string(t) + " outside solved range [" +
                                               std::to_string(t0) + ", " + std::to_string(t1) + "]");
  }
  TimeSlice::Grid g{this, 0, {0.0, 0.0, 0.0, 0.0}};
  const std::size_t count = times_.size();
  if (count == 1) {
    g.weights[0] = 1.0;
    return g;
  }
  const double h = snapshot_interval();
  const double u = std::clamp((t - t0) / h, 0.0, static_cast<double>(count - 1));
  if (count < 4) {
    // linear fallback for very short solutions
    auto i = std::min(static_cast<std::size_t>(u), count - 2);
    const double s = u - static_cast<double>(i);
    g.first = i;
    g.weights = {1.0 - s, s, 0.0, 0.0};
    return g;
  }
  auto i = static_cast<std::size_t>(u);
  std::size_t first = i == 0 ? 0 : i - 1;
  first = std::min(first, count - 4);
  const double s = u - static_cast<double>(first);  // nodes at 0, 1, 2, 3
  g.first = first;
  g.weights[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
  g.weights[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
  g.weights[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
  g.weights[3] = s * (s - 1.0) * (s - 2.0) / 6.0;
  return g;
}

GridSolution evolve_grid(const GridSolution& model, double t_from, double t_to) {
  if (std::abs(t_from - model.t_end()) > 1e-9 * model.spec().dt) {
    throw Error(ErrorCode::InvalidArgument, "evolve_grid must start from the last stored time");
  }
  GridSolution out = model;
  out.evolve_to(t_to);
  return out;
}

void write_snapshot_csv(std::ostream& out, const GridSolution& solution, std::size_t k) {
  CsvWriter csv(out, {"x", "re_psi", "im_psi"});
  const auto psi = solution.psi_values(k);
  for (std::size_t i = 0; i < psi.size(); ++i) csv.row({solution.x(i), psi[i].real(), psi[i].imag()});
}

SampledWaveFunction read_wavefunction_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const auto xs = table.column("x");
  const auto re = table.column("re_psi");
  const auto im = table.column("im_psi");
  if (xs.size() < 2) throw Error(ErrorCode::Io, "wavefunction CSV needs at least two rows");
  SampledWaveFunction out;
  out.x_min = xs.front();
  out.dx = xs[1] - xs[0];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double expected = out.x_min + out.dx * static_cast<double>(i);
    if (std::abs(xs[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw Error(ErrorCode::Io, "wavefunction CSV x column is not uniformly spaced");
    }
    out.psi.emplace_back(re[i], im[i]);
  }
  return out;
}

}  // namespace bohmstab
