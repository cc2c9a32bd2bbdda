#include "bohmstab/ensemble.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "bohmstab/rng.hpp"
#include "bohmstab/stats.hpp"
#include "detail/ensemble_common.hpp"

namespace bohmstab {

PositionSampler::PositionSampler(const std::function<double(double)>& density, Interval domain, bool parallel)
    : domain_(domain) {
  if (!(domain.hi > domain.lo)) throw Error(ErrorCode::InvalidArgument, "sampler domain is empty");
  constexpr std::size_t n = kIntervals;
  dx_ = domain.width() / static_cast<double>(n);
  std::vector<double> node(n + 1), mid(n);
  const auto count = static_cast<std::ptrdiff_t>(n + 1);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const double x = domain.lo + dx_ * static_cast<double>(i);
    node[static_cast<std::size_t>(i)] = density(x);
    if (static_cast<std::size_t>(i) < n) mid[static_cast<std::size_t>(i)] = density(x + 0.5 * dx_);
  }
  for (std::size_t i = 0; i <= n; ++i) {
    if (!(node[i] >= 0.0 && std::isfinite(node[i])) || (i < n && !(mid[i] >= 0.0 && std::isfinite(mid[i])))) {
      throw Error(ErrorCode::InvalidArgument, "density must be finite and non-negative");
    }
  }

  cdf_.assign(n + 1, 0.0);
  double coarse_error = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cdf_[j + 1] = cdf_[j] + dx_ / 6.0 * (node[j] + 4.0 * mid[j] + node[j + 1]);
    if (j % 2 == 1) {
      // Simpson on the doubled grid versus the two fine panels.
      const double coarse = 2.0 * dx_ / 6.0 * (node[j - 1] + 4.0 * node[j] + node[j + 1]);
      coarse_error += std::abs(cdf_[j + 1] - cdf_[j - 1] - coarse) / 15.0;
    }
  }
  mass_ = cdf_[n];
  if (!(mass_ > 0.0) || !std::isfinite(mass_)) throw Error(ErrorCode::InvalidArgument, "density has no mass");
  if (coarse_error > kCoarseTolerance * mass_) {
    throw Error(ErrorCode::SamplerGridTooCoarse, "density varies faster than the sampler grid resolves");
  }
  for (double& c : cdf_) c /= mass_;
  cdf_[n] = 1.0;

  // Fritsch-Carlson limited slopes, stored per interval as (left, right).
  slope_.assign(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double secant = (cdf_[j + 1] - cdf_[j]) / dx_;
    if (secant <= 0.0) continue;
    double a = node[j] / mass_, b = node[j + 1] / mass_;
    const double r2 = (a * a + b * b) / (secant * secant);
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      a *= tau;
      b *= tau;
    }
    slope_[2 * j] = a;
    slope_[2 * j + 1] = b;
  }
}

double PositionSampler::hermite(std::size_t j, double x) const {
  const double s = (x - (domain_.lo + dx_ * static_cast<double>(j))) / dx_;
  const double s2 = s * s, s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * cdf_[j] + (s3 - 2.0 * s2 + s) * dx_ * slope_[2 * j] +
         (-2.0 * s3 + 3.0 * s2) * cdf_[j + 1] + (s3 - s2) * dx_ * slope_[2 * j + 1];
}

double PositionSampler::cdf(double x) const {
  if (x <= domain_.lo) return 0.0;
  if (x >= domain_.hi) return 1.0;
  const auto j = std::min(static_cast<std::size_t>((x - domain_.lo) / dx_), kIntervals - 1);
  return hermite(j, x);
}

double PositionSampler::draw(double u) const {
  if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorCode::InvalidArgument, "uniform variate outside [0, 1)");
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin() - 1, 0,
                                                                     static_cast<std::ptrdiff_t>(kIntervals) - 1));
  const double lo = domain_.lo + dx_ * static_cast<double>(j);
  const double hi = lo + dx_;
  const double g_lo = cdf_[j] - u;
  const double g_hi = cdf_[j + 1] - u;
  if (g_lo == 0.0) return lo;
  if (!(g_lo < 0.0 && g_hi > 0.0)) return g_hi == 0.0 ? hi : lo;
  std::uintmax_t iterations = 100;
  const auto [a, b] = boost::math::tools::toms748_solve([&](double x) { return hermite(j, x) - u; }, lo, hi, g_lo,
                                                        g_hi, boost::math::tools::eps_tolerance<double>(52),
                                                        iterations);
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------

NonEquilibriumSpec NonEquilibriumSpec::offset(double delta) {
  NonEquilibriumSpec s;
  s.momentum = Momentum::Offset;
  s.delta = delta;
  return s;
}

NonEquilibriumSpec NonEquilibriumSpec::width_mismatch(double mu_actual) {
  NonEquilibriumSpec s;
  s.momentum = Momentum::WidthMismatch;
  s.mu_actual = mu_actual;
  return s;
}

NonEquilibriumSpec NonEquilibriumSpec::independent(double mean, double sd) {
  NonEquilibriumSpec s;
  s.momentum = Momentum::Independent;
  s.mean = mean;
  s.sd = sd;
  return s;
}

NonEquilibriumSpec& NonEquilibriumSpec::with_positions(std::function<double(double)> density, Interval domain,
                                                       std::string label) {
  position = Position::Custom;
  custom_density = std::move(density);
  custom_domain = domain;
  custom_label = std::move(label);
  return *this;
}

void NonEquilibriumSpec::validate() const {
  if (position == Position::Custom && (!custom_density || !(custom_domain.hi > custom_domain.lo))) {
    throw Error(ErrorCode::InvalidArgument, "custom position law needs a density and a domain");
  }
  if (momentum == Momentum::Offset && !std::isfinite(delta)) throw Error(ErrorCode::InvalidArgument, "bad offset");
  if (momentum == Momentum::WidthMismatch && !(mu_actual > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "width mismatch needs mu_actual > 0");
  }
  if (momentum == Momentum::Independent && !(sd >= 0.0 && std::isfinite(mean))) {
    throw Error(ErrorCode::InvalidArgument, "independent momenta need finite mean and sd >= 0");
  }
}

std::string NonEquilibriumSpec::describe() const {
  std::ostringstream out;
  out << (position == Position::BornRule ? "born" : "custom(" + custom_label + ")");
  switch (momentum) {
    case Momentum::KernelAtGradS: out << "+kernel"; break;
    case Momentum::Offset: out << "+offset(" << delta << ")"; break;
    case Momentum::WidthMismatch: out << "+width(" << mu_actual << ")"; break;
    case Momentum::Independent: out << "+independent(" << mean << "," << sd << ")"; break;
  }
  return out.str();
}

namespace {

double parse_number(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidArgument, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

NonEquilibriumSpec parse_nonequilibrium(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  NonEquilibriumSpec spec;
  if (head == "born" || head == "equilibrium") {
    spec = NonEquilibriumSpec::equilibrium();
  } else if (head == "offset") {
    spec = NonEquilibriumSpec::offset(parse_number(arg));
  } else if (head == "width") {
    spec = NonEquilibriumSpec::width_mismatch(parse_number(arg));
  } else if (head == "independent") {
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "independent:<mean>,<sd>");
    spec = NonEquilibriumSpec::independent(parse_number(arg.substr(0, comma)), parse_number(arg.substr(comma + 1)));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown non-equilibrium law '" + std::string(text) + "'");
  }
  spec.validate();
  return spec;
}

std::vector<PhaseSpacePoint> Ensemble::active_points() const {
  std::vector<PhaseSpacePoint> out;
  out.reserve(points.size() - truncated_count);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (active(i)) out.push_back(points[i]);
  }
  return out;
}

namespace detail {

SamplingSetup prepare_sampling(const WaveFunctionModel& model, const NonEquilibriumSpec& neq,
                               const KernelSpec& kernel, double t, std::size_t n, bool parallel) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "ensemble size must be >= 1");
  neq.validate();
  kernel.validate();
  SamplingSetup setup{model.at(t), std::nullopt, kernel};
  if (neq.position == NonEquilibriumSpec::Position::BornRule) {
    const TimeSlice& slice = setup.slice;
    setup.sampler.emplace([&slice](double x) { return std::norm(slice.psi(x)); }, model.sampling_domain(t), parallel);
  } else {
    setup.sampler.emplace(neq.custom_density, neq.custom_domain, parallel);
  }
  if (neq.momentum == NonEquilibriumSpec::Momentum::WidthMismatch) {
    if (kernel.is_dirac()) throw Error(ErrorCode::InvalidArgument, "width mismatch needs a Gaussian or Lorentzian kernel");
    setup.momentum_kernel.mu = neq.mu_actual;
  }
  return setup;
}

PhaseSpacePoint draw_particle(const SamplingSetup& setup, const NonEquilibriumSpec& neq, std::uint64_t seed,
                              std::size_t index) {
  RandomStream rng(seed, index);
  FieldSample fields;
  double x = 0.0;
  for (int attempt = 0; attempt < 64 && !fields.valid; ++attempt) {
    x = setup.sampler->draw(rng.uniform());
    fields = setup.slice.fields(x);
  }
  if (!fields.valid) throw Error(ErrorCode::InvalidField, "sampled positions keep landing in the node region");
  double p = 0.0;
  switch (neq.momentum) {
    case NonEquilibriumSpec::Momentum::KernelAtGradS:
    case NonEquilibriumSpec::Momentum::WidthMismatch:
      p = sample_conditional_momentum(setup.momentum_kernel, fields, rng);
      break;
    case NonEquilibriumSpec::Momentum::Offset:
      p = sample_conditional_momentum(setup.momentum_kernel, fields, rng) + neq.delta;
      break;
    case NonEquilibriumSpec::Momentum::Independent:
      p = neq.mean + neq.sd * rng.normal();
      break;
  }
  return {x, p};
}

Ensemble make_ensemble(const KernelSpec& kernel, const NonEquilibriumSpec& neq, double t, std::size_t n,
                       std::uint64_t seed) {
  Ensemble ens;
  ens.points.resize(n);
  ens.truncation_times.assign(n, std::numeric_limits<double>::quiet_NaN());
  ens.t = t;
  ens.seed = seed;
  std::ostringstream label;
  label << neq.describe() << " kernel=" << to_string(kernel.kind);
  if (!kernel.is_dirac()) label << "(" << kernel.mu << ")";
  label << " t=" << t;
  ens.sampler = label.str();
  return ens;
}

void check_evolution(const Ensemble& ens, const ForceLaw& law, double t1, const IntegratorSpec& integ) {
  integ.validate();
  if (ens.points.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble is empty");
  if (!(t1 >= ens.t)) throw Error(ErrorCode::InvalidArgument, "evolve_ensemble needs t1 >= ens.t");
  if (auto& m = law.model()) {
    const Interval range = m->time_range();
    if (ens.t < range.lo || t1 > range.hi) {
      throw Error(ErrorCode::OutOfTimeRange, "ensemble span lies outside the model's time range");
    }
  }
}

void finish_evolution(Ensemble& out, double t1, const EvolveOptions& options) {
  out.t = t1;
  out.truncated_count = static_cast<std::size_t>(
      std::count_if(out.truncation_times.begin(), out.truncation_times.end(), [](double v) { return !std::isnan(v); }));
  const double fraction = static_cast<double>(out.truncated_count) / static_cast<double>(out.size());
  if (fraction > options.truncation_limit) {
    throw Error(ErrorCode::TruncationThreshold, std::to_string(out.truncated_count) + " of " +
                                                    std::to_string(out.size()) + " trajectories hit the node region");
  }
}

}  // namespace detail

Ensemble sample_equilibrium(const WaveFunctionModel& model, const KernelSpec& kernel, double t, std::size_t n,
                            std::uint64_t seed) {
  return sample_nonequilibrium(model, NonEquilibriumSpec::equilibrium(), kernel, t, n, seed);
}

Ensemble sample_nonequilibrium(const WaveFunctionModel& model, const NonEquilibriumSpec& neq,
                               const KernelSpec& kernel, double t, std::size_t n, std::uint64_t seed) {
  const detail::SamplingSetup setup = detail::prepare_sampling(model, neq, kernel, t, n, true);
  Ensemble ens = detail::make_ensemble(kernel, neq, t, n, seed);
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      ens.points[static_cast<std::size_t>(i)] = detail::draw_particle(setup, neq, seed, static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(bohmstab_sample_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ens;
}

Ensemble evolve_ensemble(const Ensemble& ens, const ForceLaw& law, double t1, const IntegratorSpec& integ,
                         const EvolveOptions& options) {
  detail::check_evolution(ens, law, t1, integ);
  Ensemble out = ens;
  const auto count = static_cast<std::ptrdiff_t>(out.size());
  std::exception_ptr failure;

  if (integ.method == IntegratorSpec::Method::RK4) {
    const std::size_t steps = rk4_step_count(ens.t, t1, integ.dt);
    const double h = steps ? (t1 - ens.t) / static_cast<double>(steps) : 0.0;
    for (std::size_t s = 0; s < steps && !failure; ++s) {
      const double t = ens.t + static_cast<double>(s) * h;
      const Rk4Slices slices = Rk4Slices::build(law, t, h);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!out.active(k)) continue;
        try {
          out.points[k] = rk4_step(law, slices, out.points[k], h);
        } catch (const Error& e) {
          if (ends_trajectory(e.code())) {
            out.truncation_times[k] = t;
          } else {
#pragma omp critical(bohmstab_evolve_failure)
            if (!failure) failure = std::current_exception();
          }
        } catch (...) {
#pragma omp critical(bohmstab_evolve_failure)
          if (!failure) failure = std::current_exception();
        }
      }
    }
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!out.active(k)) continue;
      try {
        const Trajectory traj = integrate_trajectory(law, out.points[k].x, out.points[k].p, ens.t, t1,
                                                     {.method = integ.method, .dt = integ.dt, .rtol = integ.rtol,
                                                      .atol = integ.atol, .min_dt = integ.min_dt,
                                                      .max_dt = integ.max_dt, .store_stride = SIZE_MAX});
        if (traj.truncated) {
          out.truncation_times[k] = traj.truncation_time;
        } else {
          out.points[k] = traj.states.back();
        }
      } catch (...) {
#pragma omp critical(bohmstab_evolve_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  detail::finish_evolution(out, t1, options);
  return out;
}

EnsembleSummary summarize(const Ensemble& ens) {
  std::vector<double> xs, ps;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (!ens.active(i)) continue;
    xs.push_back(ens.points[i].x);
    ps.push_back(ens.points[i].p);
  }
  EnsembleSummary s;
  s.active = xs.size();
  if (xs.empty()) return s;
  s.mean_x = mean(xs);
  s.mean_p = mean(ps);
  if (xs.size() > 1) {
    s.var_x = variance(xs);
    s.var_p = variance(ps);
  }
  s.median_x = quantile(xs, 0.5);
  s.iqr_x = quantile(xs, 0.75) - quantile(xs, 0.25);
  s.median_p = quantile(ps, 0.5);
  s.iqr_p = quantile(ps, 0.75) - quantile(ps, 0.25);
  return s;
}

std::vector<double> momentum_pulls(const Ensemble& ens, const WaveFunctionModel& model, const KernelSpec& kernel) {
  if (kernel.is_dirac()) throw Error(ErrorCode::DiracKernel, "Dirac momenta have no spread");
  const double width = kernel.kind == KernelSpec::Kind::Gaussian ? std::sqrt(0.5 * kernel.mu) : kernel.mu;
  const TimeSlice slice = model.at(ens.t);
  std::vector<double> out;
  out.reserve(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (!ens.active(i)) continue;
    const FieldSample f = slice.fields(ens.points[i].x);
    if (!f.valid) throw Error(ErrorCode::InvalidField, "particle sits in the node region");
    out.push_back((ens.points[i].p - f.grad_s) / width);
  }
  return out;
}

}  // namespace bohmstab
