#include "bohmstab/dynamics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace bohmstab {

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;

void require_valid(const FieldSample& fields) {
  if (!fields.valid) throw Error(ErrorCode::InvalidField, "fields are invalid (node region)");
}

// d_t f + (p/m) d_x f for f = rho K(p - S').
struct LiouvilleStreaming {
  const KernelSpec& spec;
  FieldSample fields;
  double drho_dt;
  double drho_dx;
  double dgrad_s_dt;
  double mass;

  LiouvilleStreaming(const KernelSpec& k, const FieldSample& f, double x, const SystemParams& params,
                     const Potential& potential)
      : spec(k), fields(f), mass(params.mass) {
    drho_dx = 2.0 * f.rho * f.grad_log_r;
    drho_dt = -(drho_dx * f.grad_s + f.rho * f.hess_s) / mass;
    dgrad_s_dt = -f.grad_s * f.hess_s / mass - potential.gradient(x) - f.grad_q;
  }

  double operator()(double p) const {
    const double u = p - fields.grad_s;
    const double k = spec.profile(u);
    const double dk = spec.profile_derivative(u);
    const double df_dt = k * drho_dt - fields.rho * dk * dgrad_s_dt;
    const double df_dx = k * drho_dx - fields.rho * dk * fields.hess_s;
    return df_dt + p / mass * df_dx;
  }
};

}  // namespace

double modified_force(const KernelSpec& spec, const FieldSample& fields, double x, double p,
                      const SystemParams& params, const Potential& potential, ForceSigns signs) {
  if (spec.kind == KernelSpec::Kind::Dirac) {
    throw Error(ErrorCode::DiracKernel, "the Dirac kernel uses the Bohm force");
  }
  if (spec.kind != KernelSpec::Kind::Gaussian) {
    throw Error(ErrorCode::InvalidArgument, "modified_force is the Gaussian-kernel force");
  }
  require_valid(fields);
  const double m = params.mass;
  return -potential.gradient(x) - fields.grad_q + signs.grad_log_r * spec.mu / m * fields.grad_log_r +
         signs.hessian * fields.hess_s / m * (p - fields.grad_s);
}

double lorentzian_force_closed_form(const KernelSpec& spec, const FieldSample& fields, double x, double p,
                                    const SystemParams& params, const Potential& potential) {
  if (spec.kind != KernelSpec::Kind::Lorentzian) {
    throw Error(ErrorCode::InvalidArgument, "lorentzian force needs a Lorentzian kernel");
  }
  require_valid(fields);
  const double m = params.mass;
  const double u = p - fields.grad_s;
  const double mu2 = spec.mu * spec.mu;
  return -potential.gradient(x) - fields.grad_q + fields.hess_s / m * u -
         fields.grad_log_r / m * (u * u + mu2) * std::log1p(u * u / mu2);
}

double flux_integral_force(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p, double t,
                           const FluxIntegralOptions& options) {
  if (spec.is_dirac()) throw Error(ErrorCode::DiracKernel, "the Dirac kernel uses the Bohm force");
  if (model.params().dim != 1) throw Error(ErrorCode::InvalidArgument, "flux construction is one-dimensional");
  const FieldSample fields = model.eval_fields(x, t);
  require_valid(fields);
  const LiouvilleStreaming streaming(spec, fields, x, model.params(), model.potential());
  const double f = fields.rho * spec.profile(p - fields.grad_s);

  FluxAnchor anchor = options.anchor;
  if (anchor == FluxAnchor::Automatic) {
    anchor = spec.kind == KernelSpec::Kind::Gaussian ? FluxAnchor::LowerTail : FluxAnchor::EquilibriumMomentum;
  }

  double err = 0.0;
  if (anchor == FluxAnchor::LowerTail) {
    const double width = spec.kind == KernelSpec::Kind::Gaussian ? std::sqrt(spec.mu) : spec.mu;
    const double far = fields.grad_s - 1e3 * width;
    const double tail = Quad::integrate(streaming, far - 1e3 * width, far, 15, options.tolerance);
    const double core_scale = std::abs(streaming(fields.grad_s)) + std::abs(streaming(fields.grad_s - width)) +
                              std::abs(streaming(fields.grad_s + width));
    if (std::abs(tail) > 1e-8 * core_scale * width) {
      throw Error(ErrorCode::TailDivergence, "momentum flux does not decay as p -> -infinity");
    }
    const double integral =
        Quad::integrate(streaming, -std::numeric_limits<double>::infinity(), p, 20, options.tolerance, &err);
    return -integral / f;
  }

  const double integral = Quad::integrate(streaming, fields.grad_s, p, 20, options.tolerance, &err);
  if (!std::isfinite(integral)) throw Error(ErrorCode::QuadratureNotConverged, "flux integral is not finite");
  const double anchor_flux =
      fields.rho * spec.profile(0.0) * (-model.potential().gradient(x) - fields.grad_q);
  return (anchor_flux - integral) / f;
}

double lorentzian_force(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p, double t,
                        const FluxIntegralOptions& options) {
  if (spec.kind != KernelSpec::Kind::Lorentzian) {
    throw Error(ErrorCode::InvalidArgument, "lorentzian_force needs a Lorentzian kernel");
  }
  return flux_integral_force(spec, model, x, p, t, options);
}

double bohm_force(const FieldSample& fields, double x, const Potential& potential) {
  require_valid(fields);
  return -potential.gradient(x) - fields.grad_q;
}

double debroglie_velocity(const FieldSample& fields, const SystemParams& params) {
  require_valid(fields);
  return fields.grad_s / params.mass;
}

// ---------------------------------------------------------------------------

ForceLaw ForceLaw::modified(WaveFunctionModel model, KernelSpec kernel, ForceSigns signs) {
  kernel.validate();
  if (kernel.is_dirac()) throw Error(ErrorCode::DiracKernel, "the modified law needs a Gaussian or Lorentzian kernel");
  ForceLaw law(Kind::Modified, model.params(), model.potential());
  law.model_ = std::move(model);
  law.kernel_ = kernel;
  law.signs_ = signs;
  return law;
}

ForceLaw ForceLaw::bohm(WaveFunctionModel model) {
  ForceLaw law(Kind::Bohm, model.params(), model.potential());
  law.model_ = std::move(model);
  return law;
}

ForceLaw ForceLaw::classical(SystemParams params, Potential potential) {
  params.validate();
  return ForceLaw(Kind::Classical, params, potential);
}

ForceLaw ForceLaw::de_broglie(WaveFunctionModel model) {
  ForceLaw law(Kind::DeBroglie, model.params(), model.potential());
  law.model_ = std::move(model);
  return law;
}

std::string_view to_string(ForceLaw::Kind kind) {
  switch (kind) {
    case ForceLaw::Kind::Modified: return "modified";
    case ForceLaw::Kind::Bohm: return "bohm";
    case ForceLaw::Kind::Classical: return "classical";
    case ForceLaw::Kind::DeBroglie: return "debroglie";
  }
  return "unknown";
}

std::string ForceLaw::describe() const {
  std::ostringstream out;
  out << to_string(kind_);
  if (kind_ == Kind::Modified) {
    out << "(" << to_string(kernel_.kind) << ", mu=" << kernel_.mu;
    if (signs_.grad_log_r != 1.0 || signs_.hessian != 1.0) {
      out << ", signs=" << signs_.grad_log_r << "/" << signs_.hessian;
    }
    out << ")";
  }
  return out.str();
}

std::optional<TimeSlice> ForceLaw::slice(double t) const {
  if (!model_) return std::nullopt;
  return model_->at(t);
}

double ForceLaw::force(const FieldSample& fields, double x, double p) const {
  switch (kind_) {
    case Kind::Modified:
      if (kernel_.kind == KernelSpec::Kind::Gaussian) {
        return modified_force(kernel_, fields, x, p, params_, potential_, signs_);
      }
      return lorentzian_force_closed_form(kernel_, fields, x, p, params_, potential_);
    case Kind::Bohm:
      return bohm_force(fields, x, potential_);
    case Kind::Classical:
      return -potential_.gradient(x);
    case Kind::DeBroglie:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "the de Broglie law is first order");
}

PhaseSpacePoint ForceLaw::rate(const std::optional<TimeSlice>& slice, double x, double p) const {
  if (kind_ == Kind::Classical) return {p / params_.mass, -potential_.gradient(x)};
  FieldSample fields;
  try {
    fields = slice->fields(x);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutOfDomain) throw;
    throw Error(ErrorCode::SolverDomainExited, "x=" + std::to_string(x) + " at t=" + std::to_string(slice->time()));
  }
  if (!fields.valid) {
    throw Error(ErrorCode::NodeRegionEntered, "x=" + std::to_string(x) + " at t=" + std::to_string(slice->time()));
  }
  if (kind_ == Kind::DeBroglie) return {fields.grad_s / params_.mass, 0.0};
  return {p / params_.mass, force(fields, x, p)};
}

double flow_divergence(const ForceLaw& law, const FieldSample& fields, double p) {
  const double m = law.params().mass;
  switch (law.kind()) {
    case ForceLaw::Kind::Bohm:
    case ForceLaw::Kind::Classical:
      return 0.0;
    case ForceLaw::Kind::DeBroglie:
      require_valid(fields);
      return fields.hess_s / m;
    case ForceLaw::Kind::Modified: {
      require_valid(fields);
      if (law.kernel().kind == KernelSpec::Kind::Gaussian) return law.signs().hessian * fields.hess_s / m;
      const double u = p - fields.grad_s;
      const double mu = law.kernel().mu;
      return fields.hess_s / m - fields.grad_log_r / m * (2.0 * u * std::log1p(u * u / (mu * mu)) + 2.0 * u);
    }
  }
  return 0.0;
}

double coherent_closed_form(double x0, double v0, double alpha, double mu, double t) {
  if (mu < 0.0) throw Error(ErrorCode::InvalidArgument, "mu must be non-negative");
  if (mu == 0.0) return x0 + v0 * t + alpha * (std::cos(t) - 1.0);
  const double w = std::sqrt(mu);
  return v0 * std::sin(w * t) / w + std::cos(w * t) * (x0 - alpha) + alpha * std::cos(t);
}

LiouvilleResidual liouville_residual(const DensityFn& density, const ForceFn& force, double mass, double x, double p,
                                     double t, double h) {
  // Five-point central differences: O(h^4) truncation keeps the check sharp
  // where the superposition fields vary on short scales.
  auto d = [h](const std::function<double(double)>& g) {
    return (g(-2.0 * h) - 8.0 * g(-h) + 8.0 * g(h) - g(2.0 * h)) / (12.0 * h);
  };
  const double df_dt = d([&](double s) { return density(x, p, t + s); });
  const double df_dx = d([&](double s) { return density(x + s, p, t); });
  const double dflux_dp = d([&](double s) { return force(x, p + s, t) * density(x, p + s, t); });
  LiouvilleResidual out;
  out.residual = df_dt + p / mass * df_dx + dflux_dp;
  out.density = density(x, p, t);
  return out;
}

namespace {

void check_neighborhood(const WaveFunctionModel& model, double x, double t, double h) {
  for (double dx : {-2.0 * h, -h, 0.0, h, 2.0 * h}) {
    for (double dt : {-2.0 * h, -h, 0.0, h, 2.0 * h}) {
      if (!model.eval_fields(x + dx, t + dt).valid) {
        throw Error(ErrorCode::InvalidNeighborhood, "stencil touches the node region");
      }
    }
  }
}

}  // namespace

LiouvilleResidual liouville_residual(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p,
                                     double t, double h, ForceSigns signs) {
  if (spec.is_dirac()) throw Error(ErrorCode::DiracDensityRequest, "no Liouville residual for the Dirac kernel");
  check_neighborhood(model, x, t, h);
  auto density = [&](double xx, double pp, double tt) {
    return equilibrium_density(spec, model.eval_fields(xx, tt), pp);
  };
  auto force = [&](double xx, double pp, double tt) {
    return modified_force(spec, model.eval_fields(xx, tt), xx, pp, model.params(), model.potential(), signs);
  };
  return liouville_residual(density, force, model.params().mass, x, p, t, h);
}

LiouvilleResidual liouville_residual(const KernelSpec& spec, const WaveFunctionModel& model, double x, double p,
                                     double t, double h, ForceRoute route) {
  switch (route) {
    case ForceRoute::Corrected: return liouville_residual(spec, model, x, p, t, h, ForceSigns::corrected());
    case ForceRoute::AsPrinted: return liouville_residual(spec, model, x, p, t, h, ForceSigns::as_printed());
    case ForceRoute::FluxIntegral: break;
  }
  if (spec.is_dirac()) throw Error(ErrorCode::DiracDensityRequest, "no Liouville residual for the Dirac kernel");
  check_neighborhood(model, x, t, h);
  auto density = [&](double xx, double pp, double tt) {
    return equilibrium_density(spec, model.eval_fields(xx, tt), pp);
  };
  auto force = [&](double xx, double pp, double tt) { return flux_integral_force(spec, model, xx, pp, tt); };
  return liouville_residual(density, force, model.params().mass, x, p, t, h);
}

}  // namespace bohmstab
