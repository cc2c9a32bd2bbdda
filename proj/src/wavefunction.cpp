#include "bohmstab/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bohmstab/grid_solver.hpp"

namespace bohmstab {

FieldSample fields_from_jet(const PsiJet& jet, const SystemParams& params, double node_epsilon) {
  FieldSample out;
  const cplx psi = jet.d[0];
  out.rho = std::norm(psi);
  if (!(out.rho >= node_epsilon) || out.rho == 0.0) {
    out.valid = false;
    return out;
  }
  const cplx inv = 1.0 / psi;
  const cplx w1 = jet.d[1] * inv;
  const cplx r2 = jet.d[2] * inv;
  const cplx r3 = jet.d[3] * inv;
  const cplx dw1 = r2 - w1 * w1;
  const cplx ddw1 = r3 - r2 * w1 - 2.0 * w1 * dw1;

  const double a = w1.real();
  const double lap_r_over_r = dw1.real() + a * a;
  const double dlap_r_over_r = ddw1.real() + 2.0 * a * dw1.real();
  const double kq = -params.hbar * params.hbar / (2.0 * params.mass);

  out.grad_log_r = a;
  out.grad_s = params.hbar * w1.imag();
  out.hess_s = params.hbar * dw1.imag();
  out.q = kq * lap_r_over_r;
  out.grad_q = kq * dlap_r_over_r;
  out.valid = std::isfinite(out.grad_s) && std::isfinite(out.grad_log_r) && std::isfinite(out.q) &&
              std::isfinite(out.grad_q) && std::isfinite(out.hess_s);
  return out;
}

void oscillator_eigenfunctions(double x, double beta, std::span<double> out) {
  if (out.empty()) return;
  const double xi = beta * x;
  out[0] = std::sqrt(std::sqrt(beta * beta / std::numbers::pi)) * std::exp(-0.5 * xi * xi);
  if (out.size() == 1) return;
  out[1] = std::numbers::sqrt2 * xi * out[0];
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double nd = static_cast<double>(n);
    out[n + 1] = std::sqrt(2.0 / (nd + 1.0)) * xi * out[n] - std::sqrt(nd / (nd + 1.0)) * out[n - 1];
  }
}

namespace {

// Coefficients of d/dx psi in the eigenbasis, given those of psi:
// phi_n' = beta (sqrt(n/2) phi_{n-1} - sqrt((n+1)/2) phi_{n+1}).
std::vector<cplx> differentiate_coefficients(const std::vector<cplx>& c, double beta) {
  std::vector<cplx> d(c.size() + 1, cplx{});
  for (std::size_t n = 0; n < c.size(); ++n) {
    const double nd = static_cast<double>(n);
    if (n > 0) d[n - 1] += beta * std::sqrt(nd / 2.0) * c[n];
    d[n + 1] -= beta * std::sqrt((nd + 1.0) / 2.0) * c[n];
  }
  return d;
}

struct JetVisitor {
  double x;

  PsiJet operator()(const TimeSlice::Coherent& c) const {
    const double dx = x - c.center;
    const cplx g1{-c.beta2 * dx, c.momentum / c.hbar};
    const double g2 = -c.beta2;
    const cplx psi = c.norm * std::exp(cplx{-0.5 * c.beta2 * dx * dx, c.momentum * x / c.hbar + c.phase});
    PsiJet jet;
    jet.d[0] = psi;
    jet.d[1] = psi * g1;
    jet.d[2] = psi * (g2 + g1 * g1);
    jet.d[3] = psi * (3.0 * g1 * g2 + g1 * g1 * g1);
    return jet;
  }

  PsiJet operator()(const TimeSlice::Superposition& s) const {
    const std::size_t count = s.coeffs[3].size();
    std::array<double, 64> small{};
    std::vector<double> large;
    std::span<double> phi;
    if (count <= small.size()) {
      phi = std::span<double>(small.data(), count);
    } else {
      large.resize(count);
      phi = large;
    }
    oscillator_eigenfunctions(x, s.beta, phi);
    PsiJet jet;
    for (std::size_t k = 0; k < 4; ++k) {
      cplx acc{};
      const auto& c = s.coeffs[k];
      for (std::size_t n = 0; n < c.size(); ++n) acc += c[n] * phi[n];
      jet.d[k] = acc;
    }
    return jet;
  }

  PsiJet operator()(const TimeSlice::Grid& g) const {
    PsiJet jet;
    for (std::size_t j = 0; j < 4; ++j) {
      if (g.weights[j] == 0.0) continue;
      const PsiJet part = g.solution->jet(g.first + j, x);
      for (std::size_t k = 0; k < 4; ++k) jet.d[k] += g.weights[j] * part.d[k];
    }
    return jet;
  }
};

double superposition_max_density(const WaveFunctionModel& model, Interval domain) {
  constexpr int kSamples = 4096;
  const TimeSlice slice = model.at(0.0);
  double best = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = domain.lo + domain.width() * i / kSamples;
    best = std::max(best, std::norm(slice.psi(x)));
  }
  return best;
}

void require_harmonic(const Potential& potential) {
  if (potential.kind() != Potential::Kind::Harmonic) {
    throw Error(ErrorCode::InvalidArgument, "analytic oscillator models require a harmonic potential");
  }
}

}  // namespace

PsiJet TimeSlice::jet(double x) const { return std::visit(JetVisitor{x}, impl_); }

WaveFunctionModel WaveFunctionModel::coherent_state(double alpha, SystemParams params, Potential potential) {
  params.validate();
  require_harmonic(potential);
  if (!std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be finite");
  WaveFunctionModel model(Kind::CoherentState, params, potential);
  model.alpha_ = alpha;
  const double beta2 = params.mass * potential.omega(params) / params.hbar;
  model.node_epsilon_ = kNodeFraction * std::sqrt(beta2 / std::numbers::pi);
  return model;
}

WaveFunctionModel WaveFunctionModel::eigen_superposition(std::vector<cplx> amplitudes, SystemParams params,
                                                         Potential potential) {
  params.validate();
  require_harmonic(potential);
  if (amplitudes.empty()) throw Error(ErrorCode::InvalidArgument, "superposition needs at least one mode");
  double norm = 0.0;
  for (const cplx& a : amplitudes) norm += std::norm(a);
  if (std::abs(norm - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "superposition amplitudes must have unit norm");
  }
  WaveFunctionModel model(Kind::EigenSuperposition, params, potential);
  model.amplitudes_ = std::move(amplitudes);
  model.node_epsilon_ = kNodeFraction * superposition_max_density(model, model.sampling_domain(0.0));
  return model;
}

WaveFunctionModel WaveFunctionModel::equal_superposition(int modes, double phase_step, SystemParams params,
                                                         Potential potential) {
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "superposition needs at least one mode");
  std::vector<cplx> amplitudes;
  const double weight = 1.0 / std::sqrt(static_cast<double>(modes));
  for (int n = 0; n < modes; ++n) amplitudes.push_back(std::polar(weight, phase_step * n));
  return eigen_superposition(std::move(amplitudes), params, potential);
}

WaveFunctionModel WaveFunctionModel::grid_solution(std::shared_ptr<const GridSolution> solution) {
  if (!solution) throw Error(ErrorCode::InvalidArgument, "null grid solution");
  WaveFunctionModel model(Kind::GridSolution, solution->params(), solution->potential());
  model.node_epsilon_ = kNodeFraction * solution->initial_max_density();
  model.grid_ = std::move(solution);
  return model;
}

Interval WaveFunctionModel::sampling_domain(double t) const {
  switch (kind_) {
    case Kind::CoherentState: {
      const double omega = potential_.omega(params_);
      const double width = std::sqrt(params_.hbar / (params_.mass * omega));
      const double center = alpha_ * std::cos(omega * t);
      return {center - 10.0 * width, center + 10.0 * width};
    }
    case Kind::EigenSuperposition: {
      const double omega = potential_.omega(params_);
      const double width = std::sqrt(params_.hbar / (params_.mass * omega));
      const double turning = std::sqrt(2.0 * static_cast<double>(amplitudes_.size()) + 1.0);
      return {-(turning + 10.0) * width, (turning + 10.0) * width};
    }
    case Kind::GridSolution:
      return {grid_->spec().x_min, grid_->spec().x_max};
  }
  return {};
}

Interval WaveFunctionModel::time_range() const {
  if (kind_ == Kind::GridSolution) return {grid_->t_begin(), grid_->t_end()};
  return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}

TimeSlice WaveFunctionModel::at(double t) const {
  switch (kind_) {
    case Kind::CoherentState: {
      const double omega = potential_.omega(params_);
      TimeSlice::Coherent c{};
      c.beta2 = params_.mass * omega / params_.hbar;
      c.norm = std::sqrt(std::sqrt(c.beta2 / std::numbers::pi));
      c.center = alpha_ * std::cos(omega * t);
      c.momentum = -params_.mass * omega * alpha_ * std::sin(omega * t);
      c.hbar = params_.hbar;
      c.phase = -0.5 * omega * t - 0.5 * c.momentum * c.center / params_.hbar;
      return TimeSlice(t, params_, node_epsilon_, c);
    }
    case Kind::EigenSuperposition: {
      const double omega = potential_.omega(params_);
      TimeSlice::Superposition s;
      s.beta = std::sqrt(params_.mass * omega / params_.hbar);
      std::vector<cplx> c(amplitudes_.size());
      for (std::size_t n = 0; n < c.size(); ++n) {
        const double phase = -omega * (static_cast<double>(n) + 0.5) * t;
        c[n] = amplitudes_[n] * std::polar(1.0, phase);
      }
      s.coeffs[0] = std::move(c);
      for (std::size_t k = 1; k < 4; ++k) s.coeffs[k] = differentiate_coefficients(s.coeffs[k - 1], s.beta);
      // pad lower orders so all share the eigenfunction table length
      for (std::size_t k = 0; k < 3; ++k) s.coeffs[k].resize(s.coeffs[3].size());
      return TimeSlice(t, params_, node_epsilon_, std::move(s));
    }
    case Kind::GridSolution:
      return TimeSlice(t, params_, node_epsilon_, grid_->time_weights(t));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

FieldSample WaveFunctionModel::eval_fields(double x, double t) const { return at(t).fields(x); }

}  // namespace bohmstab
