#include "bohmstab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "bohmstab/csv.hpp"

namespace bohmstab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string upper(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw Error(ErrorCode::Config, key + ": cannot parse '" + value + "' as " + what);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& v) {
  Int out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

std::string from_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

using Cfg = ExperimentConfig;

template <class T>
ConfigKey key(std::string section, std::string name, std::string doc, T Cfg::*field) {
  ConfigKey k{section, name, std::move(doc), {}, {}};
  const std::string full = section + "." + name;
  if constexpr (std::is_same_v<T, double>) {
    k.get = [field](const Cfg& c) { return format_double(c.*field); };
    k.set = [field, full](Cfg& c, const std::string& v) { c.*field = to_double(full, v); };
  } else if constexpr (std::is_same_v<T, std::string>) {
    k.get = [field](const Cfg& c) { return c.*field; };
    k.set = [field](Cfg& c, const std::string& v) { c.*field = v; };
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    k.get = [field](const Cfg& c) { return from_list(c.*field); };
    k.set = [field, full](Cfg& c, const std::string& v) { c.*field = to_list(full, v); };
  } else {
    k.get = [field](const Cfg& c) { return std::to_string(c.*field); };
    k.set = [field, full](Cfg& c, const std::string& v) { c.*field = to_integer<T>(full, v); };
  }
  return k;
}

std::vector<ConfigKey> make_keys() {
  return {
      key("run", "scenario", "free-form label copied into sidecars", &Cfg::scenario),
      key("run", "seed", "master seed for every random stream", &Cfg::seed),
      key("run", "threads", "OpenMP worker count, 0 keeps the runtime default", &Cfg::threads),
      key("run", "out_dir", "directory for relative output paths", &Cfg::out_dir),

      key("system", "hbar", "action scale", &Cfg::hbar),
      key("system", "mass", "particle mass", &Cfg::mass),
      key("system", "stiffness", "harmonic stiffness k in V = k x^2/2, 0 for a free particle", &Cfg::stiffness),

      key("model", "kind", "coherent | superposition | grid", &Cfg::model),
      key("model", "alpha", "coherent-state amplitude", &Cfg::alpha),
      key("model", "modes", "number of equal-weight oscillator eigenmodes", &Cfg::modes),
      key("model", "phase_step", "relative phase between consecutive modes", &Cfg::phase_step),
      key("model", "file", "grid only: CSV x,re_psi,im_psi initial state (empty: seed from the superposition)",
          &Cfg::model_file),

      key("solver", "x_min", "left edge of the periodic box", &Cfg::solver_x_min),
      key("solver", "x_max", "right edge of the periodic box", &Cfg::solver_x_max),
      key("solver", "points", "grid points, FFT-friendly", &Cfg::solver_points),
      key("solver", "dt", "split-step time step", &Cfg::solver_dt),
      key("solver", "store_stride", "steps between stored snapshots", &Cfg::solver_store_stride),
      key("solver", "t_end", "minimum solver horizon", &Cfg::solver_t_end),

      key("kernel", "kind", "gaussian | lorentzian | dirac", &Cfg::kernel),
      key("kernel", "mu", "kernel width", &Cfg::mu),

      key("dynamics", "law", "modified | bohm | debroglie | classical", &Cfg::law),

      key("integrator", "method", "rk4 | rk45", &Cfg::method),
      key("integrator", "dt", "RK4 step, RK45 initial step", &Cfg::dt),
      key("integrator", "rtol", "RK45 relative tolerance", &Cfg::rtol),
      key("integrator", "atol", "RK45 absolute tolerance", &Cfg::atol),
      key("integrator", "min_dt", "RK45 step floor", &Cfg::min_dt),
      key("integrator", "max_dt", "RK45 step ceiling", &Cfg::max_dt),
      key("integrator", "store_stride", "store every n-th step", &Cfg::store_stride),

      key("trajectory", "x0", "initial position", &Cfg::traj_x0),
      key("trajectory", "v0", "initial velocity", &Cfg::traj_v0),
      key("trajectory", "t_end", "final time", &Cfg::traj_t_end),
      key("trajectory", "out", "output CSV", &Cfg::traj_out),

      key("stability", "x0", "comma-separated initial positions", &Cfg::stab_x0),
      key("stability", "v0", "comma-separated initial velocities", &Cfg::stab_v0),
      key("stability", "t_end", "final time", &Cfg::stab_t_end),
      key("stability", "out", "output CSV", &Cfg::stab_out),

      key("ensemble", "n", "particle count", &Cfg::ens_n),
      key("ensemble", "neq", "born | offset:<d> | width:<mu> | independent:<m>,<s> | custom:<csv>", &Cfg::ens_neq),
      key("ensemble", "t_end", "final time", &Cfg::ens_t_end),
      key("ensemble", "method", "rk4 | rk45 for ensemble evolution", &Cfg::ens_method),
      key("ensemble", "dt", "RK4 step, RK45 initial step", &Cfg::ens_dt),
      key("ensemble", "rtol", "RK45 relative tolerance", &Cfg::ens_rtol),
      key("ensemble", "truncation_limit", "largest tolerated truncated fraction", &Cfg::ens_truncation_limit),
      key("ensemble", "out", "output CSV", &Cfg::ens_out),

      key("relax", "n", "particle count", &Cfg::relax_n),
      key("relax", "neq", "initial non-equilibrium law, same forms as ensemble.neq", &Cfg::relax_neq),
      key("relax", "grid", "xmin,xmax,nx,pmin,pmax,np", &Cfg::relax_grid),
      key("relax", "times", "t0:t1:k gives k+1 sample times", &Cfg::relax_times),
      key("relax", "method", "rk4 | rk45; rk45 keeps near-node overshoots rare", &Cfg::relax_method),
      key("relax", "dt", "RK4 step, RK45 initial step", &Cfg::relax_dt),
      key("relax", "rtol", "RK45 relative tolerance", &Cfg::relax_rtol),
      key("relax", "bootstrap", "bootstrap resamples per sample time", &Cfg::relax_bootstrap),
      key("relax", "quadrature_order", "Gauss-Legendre order for equilibrium cells (8, 16, 32)",
          &Cfg::relax_quadrature_order),
      key("relax", "min_coverage", "smallest equilibrium mass the grid must cover at every sample time",
          &Cfg::relax_min_coverage),
      key("relax", "out", "output CSV", &Cfg::relax_out),
  };
}

// Piecewise-linear density from a CSV with columns x, density.
std::function<double(double)> tabulated_density(const std::string& path, Interval& domain) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  const CsvTable table = read_csv(in);
  auto xs = std::make_shared<std::vector<double>>(table.column("x"));
  auto ys = std::make_shared<std::vector<double>>(table.column("density"));
  if (xs->size() < 2) throw Error(ErrorCode::Io, path + ": need at least two rows");
  if (!std::ranges::is_sorted(*xs) || std::ranges::adjacent_find(*xs) != xs->end()) {
    throw Error(ErrorCode::Io, path + ": x must be strictly increasing");
  }
  if (std::ranges::any_of(*ys, [](double y) { return !(y >= 0.0); })) {
    throw Error(ErrorCode::Io, path + ": density must be non-negative");
  }
  domain = {xs->front(), xs->back()};
  return [xs, ys](double x) {
    auto it = std::upper_bound(xs->begin(), xs->end(), x);
    if (it == xs->begin()) return ys->front();
    if (it == xs->end()) return ys->back();
    const std::size_t i = static_cast<std::size_t>(it - xs->begin());
    const double w = (x - (*xs)[i - 1]) / ((*xs)[i] - (*xs)[i - 1]);
    return (1.0 - w) * (*ys)[i - 1] + w * (*ys)[i];
  };
}

}  // namespace

std::string ConfigKey::env_name() const { return "BOHMSTAB_" + upper(section) + "_" + upper(name); }

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

const ConfigKey* find_config_key(std::string_view section, std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.section == section && k.name == name) return &k;
  }
  return nullptr;
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    const std::string where = "line " + std::to_string(line_no);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::Config, where + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      const bool known = std::ranges::any_of(config_keys(), [&](const ConfigKey& k) { return k.section == section; });
      if (!known) throw Error(ErrorCode::Config, where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, where + ": expected key = value");
    if (section.empty()) throw Error(ErrorCode::Config, where + ": key outside any section");
    const std::string name = trim(std::string_view(line).substr(0, eq));
    const ConfigKey* k = find_config_key(section, name);
    if (!k) throw Error(ErrorCode::Config, where + ": unknown key " + section + "." + name);
    if (!seen.insert(section + "." + name).second) {
      throw Error(ErrorCode::Config, where + ": duplicate key " + section + "." + name);
    }
    k->set(base, trim(std::string_view(line).substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const ExperimentConfig& cfg, bool with_docs) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << k.section << "]\n";
      section = k.section;
    }
    if (with_docs) out << "# " << k.doc << " (env " << k.env_name() << ")\n";
    out << k.name << " = " << k.get(cfg) << "\n";
  }
  return out.str();
}

void apply_environment(ExperimentConfig& cfg, const EnvLookup& lookup) {
  for (const auto& k : config_keys()) {
    if (auto v = lookup(k.env_name())) k.set(cfg, trim(*v));
  }
}

void apply_environment(ExperimentConfig& cfg) {
  apply_environment(cfg, [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b) {
  return std::ranges::all_of(config_keys(), [&](const ConfigKey& k) { return k.get(a) == k.get(b); });
}

SystemParams ExperimentConfig::system_params() const {
  SystemParams p{.hbar = hbar, .mass = mass};
  p.validate();
  return p;
}

Potential ExperimentConfig::potential() const {
  if (stiffness == 0.0) return Potential::free();
  return Potential::harmonic(stiffness);
}

KernelSpec ExperimentConfig::kernel_spec() const { return make_kernel(kernel, mu); }

GridSpec ExperimentConfig::solver_spec() const {
  GridSpec g{.x_min = solver_x_min, .x_max = solver_x_max, .n_points = solver_points, .dt = solver_dt,
             .store_stride = solver_store_stride};
  g.validate();
  return g;
}

IntegratorSpec ExperimentConfig::integrator_spec() const {
  IntegratorSpec s{.method = parse_integrator_method(method), .dt = dt, .rtol = rtol, .atol = atol,
                   .min_dt = min_dt, .max_dt = max_dt, .store_stride = store_stride};
  s.validate();
  return s;
}

namespace {

IntegratorSpec with_overrides(IntegratorSpec s, const std::string& method, double dt, double rtol) {
  s.method = parse_integrator_method(method);
  s.dt = dt;
  s.rtol = rtol;
  s.atol = 1e-2 * rtol;
  s.validate();
  return s;
}

}  // namespace

IntegratorSpec ExperimentConfig::ensemble_integrator() const {
  return with_overrides(integrator_spec(), ens_method, ens_dt, ens_rtol);
}

IntegratorSpec ExperimentConfig::relax_integrator() const {
  return with_overrides(integrator_spec(), relax_method, relax_dt, relax_rtol);
}

WaveFunctionModel ExperimentConfig::build_model(double t_end) const {
  const SystemParams params = system_params();
  if (model == "coherent") {
    if (potential().kind() != Potential::Kind::Harmonic) {
      throw Error(ErrorCode::Config, "model.kind = coherent needs a harmonic potential");
    }
    return WaveFunctionModel::coherent_state(alpha, params, potential());
  }
  if (model == "superposition") return WaveFunctionModel::equal_superposition(modes, phase_step, params, potential());
  if (model != "grid") throw Error(ErrorCode::Config, "model.kind: unknown model '" + model + "'");

  GridSpec spec = solver_spec();
  std::shared_ptr<GridSolution> grid;
  if (model_file.empty()) {
    const auto seed = WaveFunctionModel::equal_superposition(modes, phase_step, params, potential());
    grid = std::make_shared<GridSolution>(spec, params, potential(),
                                          [&](double x) { return seed.psi(x, 0.0); });
  } else {
    std::ifstream in(model_file);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + model_file);
    const SampledWaveFunction sampled = read_wavefunction_csv(in);
    spec.x_min = sampled.x_min;
    spec.n_points = sampled.psi.size();
    spec.x_max = sampled.x_min + sampled.dx * static_cast<double>(sampled.psi.size());
    grid = std::make_shared<GridSolution>(spec, params, potential(), sampled.psi);
  }
  // Cubic time interpolation needs a snapshot past the last requested time.
  grid->evolve_to(std::max(solver_t_end, t_end) + 2.0 * grid->snapshot_interval());
  return WaveFunctionModel::grid_solution(grid);
}

ForceLaw ExperimentConfig::build_law(const WaveFunctionModel& m) const {
  if (law == "modified") return ForceLaw::modified(m, kernel_spec());
  if (law == "bohm") return ForceLaw::bohm(m);
  if (law == "debroglie") return ForceLaw::de_broglie(m);
  if (law == "classical") return ForceLaw::classical(m.params(), m.potential());
  throw Error(ErrorCode::Config, "dynamics.law: unknown law '" + law + "'");
}

NonEquilibriumSpec ExperimentConfig::build_nonequilibrium(std::string_view text) const {
  constexpr std::string_view prefix = "custom:";
  if (!text.starts_with(prefix)) return parse_nonequilibrium(text);
  const std::string path(text.substr(prefix.size()));
  Interval domain;
  auto density = tabulated_density(path, domain);
  NonEquilibriumSpec neq;
  neq.with_positions(std::move(density), domain, path);
  return neq;
}

void ExperimentConfig::validate() const {
  const auto check = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::Config, what);
  };
  try {
    system_params();
    potential();
    kernel_spec();
    integrator_spec();
    ensemble_integrator();
    relax_integrator();
    if (model == "grid") solver_spec();
    CoarseGrid::parse(relax_grid).validate();
    parse_schedule(relax_times);
    for (const std::string& neq : {ens_neq, relax_neq}) {
      if (!neq.starts_with("custom:")) parse_nonequilibrium(neq).validate();
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
  check(model == "coherent" || model == "superposition" || model == "grid", "model.kind: unknown model '" + model + "'");
  check(model != "coherent" || stiffness > 0.0, "model.kind = coherent needs a harmonic potential");
  check(modes >= 1, "model.modes must be >= 1");
  check(law == "modified" || law == "bohm" || law == "debroglie" || law == "classical",
        "dynamics.law: unknown law '" + law + "'");
  check(threads >= 0, "run.threads must be >= 0");
  check(traj_t_end >= 0.0 && stab_t_end >= 0.0 && ens_t_end >= 0.0, "t_end must be >= 0");
  check(ens_n > 0 && relax_n > 0, "particle counts must be positive");
  check(ens_truncation_limit >= 0.0 && ens_truncation_limit < 1.0, "ensemble.truncation_limit must be in [0, 1)");
  check(relax_min_coverage > 0.0 && relax_min_coverage <= 1.0, "relax.min_coverage must be in (0, 1]");
  check(relax_bootstrap >= 2, "relax.bootstrap must be >= 2");
  check(relax_quadrature_order == 8 || relax_quadrature_order == 16 || relax_quadrature_order == 32,
        "relax.quadrature_order must be 8, 16 or 32");
  check(!stab_x0.empty() && !stab_v0.empty(), "stability lists must be non-empty");
}

}  // namespace bohmstab
