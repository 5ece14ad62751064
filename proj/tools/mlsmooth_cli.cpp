// mlsmooth: simulate trajectories, run the linear and tanh studies, and run
// the oracle suite.
//
// Exit status: 0 success, 1 failed check or runtime failure, 2 configuration error.
// Thread count follows OMP_NUM_THREADS.

#include "mlsmooth/config.hpp"
#include "mlsmooth/oracles.hpp"
#include "mlsmooth/output.hpp"
#include "mlsmooth/study.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace mlsmooth;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> particles;
  std::optional<int> replicates;
  std::optional<int> steps;
  std::optional<std::string> scheme;
  std::optional<double> epsilon;
  std::optional<int> max_iters;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--steps", o.steps, "horizon n");
  cmd->add_option("--out", o.out, "output directory");
}

void add_run(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--particles", o.particles, "particle count M");
  cmd->add_option("--replicates", o.replicates, "replicate count N");
  cmd->add_option("--scheme", o.scheme, "newton | em_gradient | bhhh");
  cmd->add_option("--epsilon", o.epsilon, "stopping tolerance on the iterate difference");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap per step");
}

ExperimentConfig resolve(const Overrides& o, const std::string& kind) {
  ExperimentConfig cfg = o.config.empty() ? default_config(kind) : load_config(o.config);
  if (!o.config.empty() && cfg.model.kind != kind)
    throw ConfigError("config declares model.kind '" + cfg.model.kind + "' but the command expects '" + kind + "'");
  if (o.seed) cfg.seed = *o.seed;
  if (o.particles) cfg.particles = *o.particles;
  if (o.replicates) cfg.replicates = *o.replicates;
  if (o.steps) cfg.n = *o.steps;
  if (o.scheme) {
    try {
      cfg.iter.scheme = parse_scheme(*o.scheme);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.epsilon) cfg.iter.epsilon = *o.epsilon;
  if (o.max_iters) cfg.iter.max_iters = *o.max_iters;
  if (o.out) cfg.out_dir = *o.out;
  cfg.validate();
  return cfg;
}

int run_simulate(const Overrides& o, const std::string& kind) {
  const ExperimentConfig cfg = resolve(o, kind);
  const auto model = build_model(cfg);
  const Trajectory traj = simulate(*model, derive_seed(cfg.seed, 0));
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / (model->kind() + "_trajectory.csv");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  write_trajectory_csv(traj, f);
  std::cout << "wrote " << path.string() << " (" << traj.states.size() << " rows)\n";
  return 0;
}

int run_study_command(const Overrides& o, const std::string& kind) {
  const ExperimentConfig cfg = resolve(o, kind);
  const RunReport report = run_study(cfg);
  for (const auto& path : write_outputs(report, cfg.out_dir)) std::cout << "wrote " << path << '\n';
  std::cout << summary_json(report);
  return 0;
}

int run_check(const OracleConfig& oc) {
  const OracleReport rep = run_oracle_suite(oc);
  for (const auto& c : rep.checks) {
    std::printf("%-4s %-48s measured %-12.4g tolerance %-10.4g %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.measured, c.tolerance, c.detail.c_str());
  }
  std::printf("%d of %zu checks failed\n", rep.failures(), rep.checks.size());
  return rep.all_passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-likelihood state smoothing with score-based iterations"};
  app.require_subcommand(1);

  Overrides sim, lin, nonlin;
  std::string sim_kind = "linear";
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate a trajectory and write it as CSV");
  add_common(simulate_cmd, sim);
  simulate_cmd->add_option("--model", sim_kind, "linear | tanh")->check(CLI::IsMember({"linear", "tanh"}));

  auto* linear_cmd = app.add_subcommand("linear", "three-state linear study against Kalman/RTS");
  add_common(linear_cmd, lin);
  add_run(linear_cmd, lin);
  auto* nonlinear_cmd = app.add_subcommand("nonlinear", "scalar tanh study");
  add_common(nonlinear_cmd, nonlin);
  add_run(nonlinear_cmd, nonlin);

  OracleConfig oc;
  auto* check_cmd = app.add_subcommand("check", "run the oracle suite");
  check_cmd->add_option("--seed", oc.seed, "oracle seed");
  check_cmd->add_option("--particles", oc.particles, "particle count of Monte Carlo oracles")->check(CLI::Range(2, 10000000));
  check_cmd->add_option("--trajectories", oc.trajectories, "trajectories for score moment oracles")->check(CLI::Range(10, 10000000));
  check_cmd->add_option("--runs", oc.runs, "independent runs for standard errors")->check(CLI::Range(3, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate_cmd) {
      if (!sim.config.empty()) sim_kind = load_config(sim.config).model.kind;
      return run_simulate(sim, sim_kind);
    }
    if (*linear_cmd) return run_study_command(lin, "linear");
    if (*nonlinear_cmd) return run_study_command(nonlin, "tanh");
    return run_check(oc);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
