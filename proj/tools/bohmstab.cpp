#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "bohmstab/config.hpp"
#include "bohmstab/csv.hpp"
#include "bohmstab/verify.hpp"

namespace fs = std::filesystem;
using namespace bohmstab;
using json = nlohmann::ordered_json;

namespace {

// A command-line flag that overrides one config key after file and
// environment layers have been applied.
struct Binding {
  std::string value;
  CLI::Option* option = nullptr;
  const ConfigKey* key = nullptr;
};

class Bindings {
 public:
  void add(CLI::App* app, const std::string& flag, const char* section, const char* name) {
    const ConfigKey* key = find_config_key(section, name);
    if (!key) throw std::logic_error(std::string("no config key ") + section + "." + name);
    Binding& b = list_.emplace_back();
    b.key = key;
    b.option = app->add_option(flag, b.value,
                               key->doc + " [" + section + "." + name + ", default " + key->get(ExperimentConfig{}) + "]");
  }

  void apply(ExperimentConfig& cfg) const {
    for (const auto& b : list_) {
      if (b.option->count() > 0) b.key->set(cfg, b.value);
    }
  }

 private:
  std::deque<Binding> list_;
};

// coherent | superposition:<m> | grid | grid:<file>
void apply_model(ExperimentConfig& cfg, const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "coherent" && arg.empty()) {
    cfg.model = "coherent";
  } else if (head == "superposition") {
    cfg.model = "superposition";
    if (!arg.empty()) find_config_key("model", "modes")->set(cfg, arg);
  } else if (head == "grid") {
    cfg.model = "grid";
    cfg.model_file = arg;
  } else {
    throw Error(ErrorCode::Config, "--model: expected coherent, superposition:<m> or grid:<file>, got '" + text + "'");
  }
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& name) {
  const fs::path p(name);
  const fs::path full = p.is_absolute() ? p : fs::path(cfg.out_dir) / p;
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  return full;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

// Provenance sidecar next to a CSV. Thread count and output directory are
// left out so that the sidecar is as reproducible as the data.
void write_sidecar(const fs::path& csv, const ExperimentConfig& cfg, json extra) {
  json config;
  for (const auto& k : config_keys()) {
    if (k.section == "run" && (k.name == "threads" || k.name == "out_dir")) continue;
    config[k.section + "." + k.name] = k.get(cfg);
  }
  json j;
  j["schema"] = "bohmstab-csv v1";
  j["data"] = csv.filename().string();
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.seed;
  for (auto& [key, value] : extra.items()) j[key] = value;
  j["config"] = std::move(config);
  fs::path side = csv;
  side.replace_extension(".json");
  open_output(side) << j.dump(2) << '\n';
}

double last_time(const std::vector<double>& ts) { return ts.empty() ? 0.0 : ts.back(); }

int run_trajectory(const ExperimentConfig& cfg) {
  const auto model = cfg.build_model(cfg.traj_t_end);
  const ForceLaw law = cfg.build_law(model);
  const Trajectory tr = integrate_trajectory(law, cfg.traj_x0, cfg.mass * cfg.traj_v0, 0.0, cfg.traj_t_end,
                                             cfg.integrator_spec());
  const fs::path path = output_path(cfg, cfg.traj_out);
  {
    auto out = open_output(path);
    CsvWriter csv(out, {"t", "x", "p"});
    for (std::size_t i = 0; i < tr.times.size(); ++i) csv.row({tr.times[i], tr.states[i].x, tr.states[i].p});
  }
  json extra{{"law", law.describe()}, {"rows", tr.times.size()}, {"truncated", tr.truncated}};
  if (tr.truncated) {
    extra["truncation_time"] = tr.truncation_time;
    extra["truncation_reason"] = tr.truncation_reason;
    std::cerr << "trajectory truncated at t=" << tr.truncation_time << ": " << tr.truncation_reason << '\n';
  }
  write_sidecar(path, cfg, std::move(extra));
  return 0;
}

int run_stability(const ExperimentConfig& cfg) {
  if (cfg.model != "coherent") throw Error(ErrorCode::Config, "stability needs model.kind = coherent");
  const auto model = cfg.build_model(cfg.stab_t_end);
  const double omega = model.potential().omega(model.params());
  const double width = std::sqrt(cfg.hbar / (2.0 * cfg.mass * omega));
  const std::vector<std::pair<std::string, ForceLaw>> laws{{"modified", ForceLaw::modified(model, cfg.kernel_spec())},
                                                           {"bohm", ForceLaw::bohm(model)}};
  const fs::path path = output_path(cfg, cfg.stab_out);
  json runs = json::array();
  {
    auto out = open_output(path);
    CsvWriter csv(out, {"law", "x0", "v0", "t", "x", "p", "center", "width"});
    for (double x0 : cfg.stab_x0) {
      for (double v0 : cfg.stab_v0) {
        for (const auto& [name, law] : laws) {
          const Trajectory tr = integrate_trajectory(law, x0, cfg.mass * v0, 0.0, cfg.stab_t_end, cfg.integrator_spec());
          for (std::size_t i = 0; i < tr.times.size(); ++i) {
            const double t = tr.times[i];
            csv.row({name, x0, v0, t, tr.states[i].x, tr.states[i].p, cfg.alpha * std::cos(omega * t), width});
          }
          runs.push_back({{"law", name}, {"x0", x0}, {"v0", v0}, {"truncated", tr.truncated}});
        }
      }
    }
  }
  write_sidecar(path, cfg, {{"runs", std::move(runs)}});
  return 0;
}

int run_ensemble(const ExperimentConfig& cfg) {
  const auto model = cfg.build_model(cfg.ens_t_end);
  const KernelSpec kernel = cfg.kernel_spec();
  const ForceLaw law = cfg.build_law(model);
  const NonEquilibriumSpec neq = cfg.build_nonequilibrium(cfg.ens_neq);
  const Ensemble start = sample_nonequilibrium(model, neq, kernel, 0.0, cfg.ens_n, cfg.seed);
  const IntegratorSpec integ = cfg.ensemble_integrator();
  const Ensemble end = cfg.ens_t_end > 0.0
                           ? evolve_ensemble(start, law, cfg.ens_t_end, integ, {.truncation_limit = cfg.ens_truncation_limit})
                           : start;
  const fs::path path = output_path(cfg, cfg.ens_out);
  {
    auto out = open_output(path);
    CsvWriter csv(out, {"x", "p"});
    for (const auto& p : end.active_points()) csv.row({p.x, p.p});
  }
  write_sidecar(path, cfg,
                {{"law", law.describe()},
                 {"nonequilibrium", neq.describe()},
                 {"sampler", end.sampler},
                 {"particles", end.size()},
                 {"truncation_count", end.truncated_count},
                 {"t_end", end.t}});
  return 0;
}

int run_relax(const ExperimentConfig& cfg) {
  const std::vector<double> times = parse_schedule(cfg.relax_times);
  RelaxationSpec spec{.model = cfg.build_model(last_time(times)),
                      .kernel = cfg.kernel_spec(),
                      .neq = cfg.build_nonequilibrium(cfg.relax_neq),
                      .n = cfg.relax_n,
                      .grid = CoarseGrid::parse(cfg.relax_grid),
                      .times = times,
                      .integrator = cfg.relax_integrator(),
                      .seed = cfg.seed,
                      .bootstrap_resamples = cfg.relax_bootstrap,
                      .quadrature_order = cfg.relax_quadrature_order,
                      .min_coverage = cfg.relax_min_coverage};
  const HSeries h = run_relaxation(spec);
  const fs::path path = output_path(cfg, cfg.relax_out);
  {
    auto out = open_output(path);
    CsvWriter csv(out, {"t", "hbar", "hbar_floor", "out_of_range_mass"});
    for (std::size_t i = 0; i < h.times.size(); ++i) csv.row({h.times[i], h.hbar[i], h.floor[i], h.out_of_range_mass[i]});
  }
  write_sidecar(path, cfg,
                {{"nonequilibrium", spec.neq.describe()},
                 {"grid", h.grid.describe()},
                 {"particles", h.n_particles},
                 {"truncated", h.truncated}});
  return 0;
}

int run_verify_command(const ExperimentConfig& cfg, const std::string& level, bool tamper, const std::string& report) {
  const VerifyReport r = run_verify({.level = parse_verify_level(level), .seed = cfg.seed, .tamper = tamper});
  for (const auto& c : r.checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << c.measured << ' ' << c.relation << ' '
              << c.tolerance << "  (" << c.seconds << " s)\n";
  }
  const std::string text = r.to_json();
  if (report == "-") {
    std::cout << text;
  } else {
    open_output(output_path(cfg, report)) << text;
  }
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bohmstab: stable second-order pilot-wave dynamics, ensembles and coarse-grained relaxation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Configuration keys and defaults (INI sections, env override BOHMSTAB_<SECTION>_<KEY>):\n\n" +
             serialize_config(ExperimentConfig{}, true));

  std::string config_path;
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  Bindings bind;
  bind.add(&app, "--seed", "run", "seed");
  bind.add(&app, "--threads", "run", "threads");
  bind.add(&app, "--out-dir", "run", "out_dir");
  std::string model_text;
  const auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", model_text, "coherent | superposition:<m> | grid | grid:<file> [model.kind]");
  };

  auto* traj = app.add_subcommand("trajectory", "integrate one trajectory, CSV t,x,p");
  add_model(traj);
  bind.add(traj, "--law", "dynamics", "law");
  bind.add(traj, "--kernel", "kernel", "kind");
  bind.add(traj, "--mu", "kernel", "mu");
  bind.add(traj, "--alpha", "model", "alpha");
  bind.add(traj, "--x0", "trajectory", "x0");
  bind.add(traj, "--v0", "trajectory", "v0");
  bind.add(traj, "--t-end", "trajectory", "t_end");
  bind.add(traj, "--dt", "integrator", "dt");
  bind.add(traj, "--method", "integrator", "method");
  bind.add(traj, "--stride", "integrator", "store_stride");
  bind.add(traj, "--out", "trajectory", "out");

  auto* stab = app.add_subcommand("stability", "paired modified and Bohm trajectories around a coherent packet");
  bind.add(stab, "--mu", "kernel", "mu");
  bind.add(stab, "--kernel", "kernel", "kind");
  bind.add(stab, "--alpha", "model", "alpha");
  bind.add(stab, "--x0", "stability", "x0");
  bind.add(stab, "--v0", "stability", "v0");
  bind.add(stab, "--t-end", "stability", "t_end");
  bind.add(stab, "--dt", "integrator", "dt");
  bind.add(stab, "--out", "stability", "out");

  auto* ens = app.add_subcommand("ensemble", "sample and evolve an ensemble, CSV x,p plus JSON sidecar");
  add_model(ens);
  bind.add(ens, "--n", "ensemble", "n");
  bind.add(ens, "--law", "dynamics", "law");
  bind.add(ens, "--kernel", "kernel", "kind");
  bind.add(ens, "--mu", "kernel", "mu");
  bind.add(ens, "--alpha", "model", "alpha");
  bind.add(ens, "--neq", "ensemble", "neq");
  bind.add(ens, "--t-end", "ensemble", "t_end");
  bind.add(ens, "--dt", "ensemble", "dt");
  bind.add(ens, "--method", "ensemble", "method");
  bind.add(ens, "--out", "ensemble", "out");

  auto* relax = app.add_subcommand("relax", "coarse-grained H function of a non-equilibrium ensemble over time");
  add_model(relax);
  bind.add(relax, "--kernel", "kernel", "kind");
  bind.add(relax, "--mu", "kernel", "mu");
  bind.add(relax, "--neq", "relax", "neq");
  bind.add(relax, "--n", "relax", "n");
  bind.add(relax, "--grid", "relax", "grid");
  bind.add(relax, "--times", "relax", "times");
  bind.add(relax, "--dt", "relax", "dt");
  bind.add(relax, "--method", "relax", "method");
  bind.add(relax, "--bootstrap", "relax", "bootstrap");
  bind.add(relax, "--min-coverage", "relax", "min_coverage");
  bind.add(relax, "--out", "relax", "out");

  auto* verify = app.add_subcommand("verify", "run the built-in verification suite, JSON report");
  std::string level = "quick", report = "-";
  bool tamper = false;
  verify->add_option("--level", level, "quick | full")->capture_default_str();
  verify->add_option("--report", report, "JSON report path, - for stdout")->capture_default_str();
  verify->add_flag("--tamper", tamper, "flip the sign of the S'' force term (mutation test)");

  auto* config = app.add_subcommand("config", "print the effective configuration");
  bool reference = false;
  config->add_flag("--reference", reference, "print every key with its documentation and default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends report success; real usage errors share exit code 2.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    apply_environment(cfg);
    bind.apply(cfg);
    if (!model_text.empty()) apply_model(cfg, model_text);
    cfg.validate();
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

    if (*config) {
      std::cout << serialize_config(reference ? ExperimentConfig{} : cfg, reference);
      return 0;
    }
    if (*traj) return run_trajectory(cfg);
    if (*stab) return run_stability(cfg);
    if (*ens) return run_ensemble(cfg);
    if (*relax) return run_relax(cfg);
    if (*verify) return run_verify_command(cfg, level, tamper, report);
  } catch (const Error& e) {
    std::cerr << "bohmstab: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bohmstab: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
