// Command-line front end. Every command resolves to a RunSpec (also loadable
// with --config) and writes a CSV/JSON table whose header embeds the resolved
// spec, so outputs reproduce themselves.
//
// Exit codes: 0 ok, 1 validation failure, 2 numerical failure,
// 3 verify-suite violation.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ouphase/ouphase.hpp"

namespace {

using ouphase::RunSpec;

void add_common_options(CLI::App* cmd, RunSpec& s) {
  cmd->add_option("--lambda", s.plant.lambda,
                  "Inverse correlation time of the phase (rad/s)");
  cmd->add_option("--kappa", s.plant.kappa, "Phase variation magnitude (rad/s)");
  cmd->add_option("--alpha2", s.plant.alpha2, "Photon flux |alpha|^2 (1/s)");
  cmd->add_option("--eta-d", s.plant.eta_d, "Detector efficiency in (0,1]");
  cmd->add_option("--mu", s.mu, "Uncertainty level in [0,1)");
  cmd->add_option("--delta", s.delta, "Uncertainty realisation in [-1,1]");
  cmd->add_option("--output", s.output, "Output path (default: stdout)");
  cmd->add_option("--format", s.format, "Output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
}

void add_sweep_options(CLI::App* cmd, RunSpec& s, std::string& axis,
                       std::string& filters) {
  cmd->add_option("--axis", axis, "Sweep axis: delta|mu|alpha2|kappa|lambda");
  cmd->add_option("--points", s.points, "Grid points (default 201)");
  cmd->add_option("--min", s.axis_min, "Grid lower bound (default per axis)");
  cmd->add_option("--max", s.axis_max, "Grid upper bound (default per axis)");
  cmd->add_option("--filters", filters,
                  "Comma list of kalman,robust,sql,optimal");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ouphase: Kalman / robust guaranteed-cost / SQL phase-estimation "
      "filters for an Ornstein-Uhlenbeck phase, with worst-case error "
      "analysis and a Monte Carlo validator"};
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "Execute a JSON RunSpec file");
  std::string out_override, fmt_override;
  app.add_option("--output", out_override,
                 "Output path override (with --config)");
  app.add_option("--format", fmt_override,
                 "Output format override (with --config)");

  RunSpec s;
  std::string axis = "delta", filters, mode = "linearized";

  CLI::App* design = app.add_subcommand("design", "The four filter designs");
  add_common_options(design, s);
  design->add_option("--filters", filters,
                     "Comma list of kalman,robust,sql,optimal");

  CLI::App* msweep = app.add_subcommand(
      "mse-sweep", "Mean-square errors along a parameter axis");
  add_common_options(msweep, s);
  add_sweep_options(msweep, s, axis, filters);

  CLI::App* worst = app.add_subcommand(
      "worst-case", "Worst-case (delta = -1) errors along an axis");
  add_common_options(worst, s);
  add_sweep_options(worst, s, axis, filters);

  CLI::App* eff = app.add_subcommand(
      "efficiency", "Effective quantum efficiency along an axis");
  add_common_options(eff, s);
  add_sweep_options(eff, s, axis, filters);

  CLI::App* noise = app.add_subcommand(
      "noise-power", "Effective noise power along an axis");
  add_common_options(noise, s);
  add_sweep_options(noise, s, axis, filters);

  CLI::App* ttime = app.add_subcommand(
      "two-time", "Two-time error correlations of the four curve set");
  add_common_options(ttime, s);
  ttime->add_option("--tau-max", s.tau_max, "Largest lag (s); 0 = auto");
  ttime->add_option("--points", s.tau_points, "Lag count (default 60)");

  CLI::App* sim = app.add_subcommand(
      "simulate", "Closed-loop Monte Carlo of one filter");
  add_common_options(sim, s);
  sim->add_option("--filter", s.sim_filter, "kalman|robust|sql");
  sim->add_option("--mode", mode, "linearized|sine")
      ->check(CLI::IsMember({"linearized", "sine"}));
  sim->add_option("--dt", s.sim.dt, "Step size (s)");
  sim->add_option("--steps", s.sim.n_steps, "Steps per trajectory");
  sim->add_option("--traj", s.sim.n_traj, "Trajectories");
  sim->add_option("--burn-in", s.sim.burn_in_fraction, "Burn-in fraction");
  sim->add_option("--seed", s.sim.seed, "RNG seed (default 0)");
  sim->add_option("--tau-max", s.tau_max,
                  "Also record the empirical two-time curve up to this lag");
  sim->add_option("--tau-points", s.tau_points, "Lag count (default 60)");

  CLI::App* verify = app.add_subcommand(
      "verify", "Randomized worst-case ordering property suite");
  add_common_options(verify, s);
  verify->add_option("--draws", s.draws, "Random parameter draws");
  verify->add_option("--seed", s.seed, "RNG seed (default 0)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: cannot read config " << config_path << "\n";
        return 1;
      }
      nlohmann::json j;
      in >> j;
      RunSpec cs = ouphase::runspec_from_json(j);
      if (!out_override.empty()) cs.output = out_override;
      if (!fmt_override.empty()) cs.format = fmt_override;
      return ouphase::execute_to_output(cs, std::cout);
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 1;
    }
    CLI::App* sub = app.get_subcommands().front();
    s.command = ouphase::command_from_string(sub->get_name());
    if (s.command == ouphase::Command::WorstCase && !worst->count("--axis")) {
      axis = "mu";
    }
    s.axis = ouphase::axis_from_string(axis);
    if (!filters.empty()) ouphase::set_filters(s, filters);
    s.sim.mode = mode == "sine" ? ouphase::MeasurementMode::Sine
                                : ouphase::MeasurementMode::Linearized;
    return ouphase::execute_to_output(s, std::cout);
  } catch (const ouphase::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
}
