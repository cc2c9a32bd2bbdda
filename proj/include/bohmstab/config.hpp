#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bohmstab/ensemble.hpp"
#include "bohmstab/grid_solver.hpp"
#include "bohmstab/integrators.hpp"
#include "bohmstab/relaxation.hpp"

namespace bohmstab {

// Declarative scenario description. Every field maps to exactly one
// "[section] key = value" entry; see config_keys().
struct ExperimentConfig {
  // [run]
  std::string scenario = "default";
  std::uint64_t seed = 1;
  int threads = 0;  // 0: OpenMP default
  std::string out_dir = ".";

  // [system]
  double hbar = 1.0;
  double mass = 1.0;
  double stiffness = 1.0;  // V = k x^2 / 2; 0 selects the free particle

  // [model]
  std::string model = "coherent";  // coherent | superposition | grid
  double alpha = 1.0;
  int modes = 4;
  double phase_step = 0.5;
  std::string model_file;  // grid only: CSV x,re_psi,im_psi; empty seeds the superposition

  // [solver]
  double solver_x_min = -10.0;
  double solver_x_max = 10.0;
  std::size_t solver_points = 512;
  double solver_dt = 1e-3;
  std::size_t solver_store_stride = 10;
  double solver_t_end = 20.0;

  // [kernel]
  std::string kernel = "gaussian";
  double mu = 1.0;

  // [dynamics]
  std::string law = "modified";  // modified | bohm | debroglie | classical

  // [integrator]
  std::string method = "rk4";
  double dt = 1e-3;
  double rtol = 1e-10;
  double atol = 1e-12;
  double min_dt = 1e-12;
  double max_dt = 0.5;
  std::size_t store_stride = 1;

  // [trajectory]
  double traj_x0 = 1.0;
  double traj_v0 = 0.25;
  double traj_t_end = 20.0;
  std::string traj_out = "trajectory.csv";

  // [stability]
  std::vector<double> stab_x0{1.0};
  std::vector<double> stab_v0{0.25, -0.25};
  double stab_t_end = 20.0;
  std::string stab_out = "stability.csv";

  // [ensemble]
  std::size_t ens_n = 100'000;
  std::string ens_neq = "born";
  double ens_t_end = 5.0;
  std::string ens_method = "rk4";
  double ens_dt = 0.01;
  double ens_rtol = 1e-5;
  double ens_truncation_limit = 1e-3;
  std::string ens_out = "ensemble.csv";

  // [relax]
  std::size_t relax_n = 200'000;
  std::string relax_neq = "offset:1";
  std::string relax_grid = "-6,6,30,-6,6,30";
  std::string relax_times = "0:20:20";
  std::string relax_method = "rk45";
  double relax_dt = 0.01;
  double relax_rtol = 1e-5;
  int relax_bootstrap = 200;
  int relax_quadrature_order = 8;
  double relax_min_coverage = 1.0 - 1e-4;
  std::string relax_out = "relax.csv";

  void validate() const;

  SystemParams system_params() const;
  Potential potential() const;
  KernelSpec kernel_spec() const;
  GridSpec solver_spec() const;
  IntegratorSpec integrator_spec() const;
  // [integrator] with the experiment's own method, step and tolerance; atol
  // is rtol / 100.
  IntegratorSpec ensemble_integrator() const;
  IntegratorSpec relax_integrator() const;
  // Builds the wave-function model; grid models run the solver up to
  // solver_t_end (or the largest time the experiment needs, if later).
  WaveFunctionModel build_model(double t_end) const;
  ForceLaw build_law(const WaveFunctionModel& model) const;
  // custom:<file> reads a CSV with columns x, density.
  NonEquilibriumSpec build_nonequilibrium(std::string_view text) const;
};

struct ConfigKey {
  std::string section;
  std::string name;
  std::string doc;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;

  std::string env_name() const;  // BOHMSTAB_<SECTION>_<KEY>
};

const std::vector<ConfigKey>& config_keys();
const ConfigKey* find_config_key(std::string_view section, std::string_view name);

// Parses "[section]" headers and "key = value" lines on top of `base`.
// Lines starting with '#' or ';' are comments. Unknown sections or keys,
// duplicates and malformed values throw Error(Config).
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
std::string serialize_config(const ExperimentConfig& cfg, bool with_docs = false);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_environment(ExperimentConfig& cfg, const EnvLookup& lookup);
void apply_environment(ExperimentConfig& cfg);

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace bohmstab
