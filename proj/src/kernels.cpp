#include "bohmstab/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bohmstab {

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;

void require_valid(const FieldSample& fields) {
  if (!fields.valid) throw Error(ErrorCode::InvalidField, "fields are invalid (node region)");
}

}  // namespace

KernelSpec KernelSpec::gaussian(double mu) {
  KernelSpec spec{Kind::Gaussian, mu};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::lorentzian(double mu) {
  KernelSpec spec{Kind::Lorentzian, mu};
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (kind != Kind::Dirac && !(mu > 0.0 && std::isfinite(mu))) {
    throw Error(ErrorCode::InvalidArgument, "kernel width mu must be positive");
  }
}

double KernelSpec::profile(double u) const {
  switch (kind) {
    case Kind::Gaussian:
      return std::exp(-u * u / mu) / std::sqrt(std::numbers::pi * mu);
    case Kind::Lorentzian:
      return mu / (std::numbers::pi * (u * u + mu * mu));
    case Kind::Dirac:
      break;
  }
  throw Error(ErrorCode::DiracDensityRequest, "the Dirac kernel has no pointwise density");
}

double KernelSpec::profile_derivative(double u) const {
  switch (kind) {
    case Kind::Gaussian:
      return -2.0 * u / mu * profile(u);
    case Kind::Lorentzian: {
      const double d = u * u + mu * mu;
      return -2.0 * mu * u / (std::numbers::pi * d * d);
    }
    case Kind::Dirac:
      break;
  }
  throw Error(ErrorCode::DiracDensityRequest, "the Dirac kernel has no pointwise density");
}

std::string_view to_string(KernelSpec::Kind kind) {
  switch (kind) {
    case KernelSpec::Kind::Gaussian: return "gaussian";
    case KernelSpec::Kind::Lorentzian: return "lorentzian";
    case KernelSpec::Kind::Dirac: return "dirac";
  }
  return "unknown";
}

KernelSpec::Kind parse_kernel_kind(std::string_view name) {
  if (name == "gaussian") return KernelSpec::Kind::Gaussian;
  if (name == "lorentzian") return KernelSpec::Kind::Lorentzian;
  if (name == "dirac") return KernelSpec::Kind::Dirac;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

KernelSpec make_kernel(std::string_view name, double mu) {
  const auto kind = parse_kernel_kind(name);
  if (kind == KernelSpec::Kind::Dirac) return KernelSpec::dirac();
  KernelSpec spec{kind, mu};
  spec.validate();
  return spec;
}

double equilibrium_density(const KernelSpec& spec, const FieldSample& fields, double p) {
  if (spec.is_dirac()) throw Error(ErrorCode::DiracDensityRequest, "the Dirac kernel has no pointwise density");
  require_valid(fields);
  return fields.rho * spec.profile(p - fields.grad_s);
}

MarginalReport check_marginals(const KernelSpec& spec, const WaveFunctionModel& model, double t,
                               const QuadratureSpec& quadrature) {
  MarginalReport report;
  if (quadrature.positions < 1) throw Error(ErrorCode::InvalidArgument, "need at least one position");
  const Interval domain = model.sampling_domain(t);
  const double center = 0.5 * (domain.lo + domain.hi);
  const double half = 0.25 * domain.width();
  const double mass = model.params().mass;
  const TimeSlice slice = model.at(t);

  for (int i = 0; i < quadrature.positions; ++i) {
    const double x = quadrature.positions == 1
                         ? center
                         : center - half + 2.0 * half * i / static_cast<double>(quadrature.positions - 1);
    const FieldSample fields = slice.fields(x);
    if (!fields.valid) continue;
    ++report.positions_checked;
    if (spec.is_dirac()) continue;  // sifting is exact: both errors vanish identically

    const double inf = std::numeric_limits<double>::infinity();
    auto density = [&](double u) { return equilibrium_density(spec, fields, fields.grad_s + u); };
    double err = 0.0;
    const double rho_int = Quad::integrate(density, -inf, inf, 20, quadrature.tolerance, &err);

    auto odd_part = [&](double u) { return u / mass * density(u); };
    const double L = quadrature.pv_half_range;
    const double pv = Quad::integrate(odd_part, -L, L, 20, quadrature.tolerance);
    const double pv_doubled = Quad::integrate(odd_part, -2.0 * L, 2.0 * L, 20, quadrature.tolerance);
    const double scale = std::max(fields.rho, std::numeric_limits<double>::min());
    if (std::abs(pv_doubled - pv) > 1e-8 * std::max(1.0, scale)) {
      throw Error(ErrorCode::QuadratureNotConverged, "principal-value current changes when the window doubles");
    }
    const double current = fields.grad_s / mass * rho_int + pv;

    report.density_error = std::max(report.density_error, std::abs(rho_int - fields.rho));
    report.current_error = std::max(report.current_error, std::abs(current - fields.rho * fields.grad_s / mass));
  }
  return report;
}

double sample_conditional_momentum(const KernelSpec& spec, const FieldSample& fields, RandomStream& rng) {
  require_valid(fields);
  switch (spec.kind) {
    case KernelSpec::Kind::Gaussian:
      return fields.grad_s + rng.normal() * std::sqrt(0.5 * spec.mu);
    case KernelSpec::Kind::Lorentzian:
      return fields.grad_s + spec.mu * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    case KernelSpec::Kind::Dirac:
      return fields.grad_s;
  }
  return fields.grad_s;
}

}  // namespace bohmstab
