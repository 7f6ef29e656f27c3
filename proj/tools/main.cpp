// Copyright 2026 The Revsteer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revsteer/config_io.hpp"
#include "revsteer/revsteer.hpp"

namespace fs = std::filesystem;
using revsteer::ConfigError;
using revsteer::Json;
using revsteer::RunConfig;
using revsteer::Vector;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    values.push_back(std::stod(cell));
  }
  return values;
}

Vector parse_state(const std::string& csv) {
  const std::vector<double> values = parse_value_list(csv);
  Vector x(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = values[i];
  }
  return x;
}

std::string resolve_out_dir(const RunConfig& rc, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!rc.out_dir.empty()) return rc.out_dir;
  throw ConfigError("no output directory: pass --out or set io.out_dir");
}

int cmd_synthesize(const std::string& config_path,
                   std::optional<std::uint64_t> seed, const std::string& out,
                   bool save_z) {
  RunConfig rc = revsteer::load_run_config(config_path);
  if (seed) rc.experiment.synthesis_seed = *seed;
  const std::string dir = resolve_out_dir(rc, out);

  const auto& cfg = rc.experiment;
  if (cfg.source == revsteer::ControllerSource::kLearned) {
    const auto sys = cfg.make_system();
    const auto grid = cfg.make_grid();
    revsteer::DeterministicInput u = cfg.det_input;
    if (u.control_dim() == 0) {
      u = revsteer::DeterministicInput::zero(sys.control_dim);
    }
    revsteer::SynthesisResult result =
        revsteer::synthesize(sys, grid, cfg.x_f, cfg.sigma, u,
                             cfg.train_trajectories, cfg.train,
                             cfg.synthesis_seed);
    revsteer::save_bundle(dir, rc, result.controller, &result, save_z);
    std::cout << "bundle written to " << dir << " (final loss "
              << result.loss_history.back() << ")\n";
  } else {
    const auto ctrl = revsteer::build_controller(cfg);
    revsteer::save_bundle(dir, rc, ctrl);
    std::cout << "bundle written to " << dir << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& bundle_dir, const std::string& x0_csv,
                 int rollouts, std::uint64_t seed, const std::string& out) {
  const auto bundle = revsteer::load_bundle(bundle_dir);
  const auto& cfg = bundle.config.experiment;
  const auto sys = cfg.make_system();
  const auto grid = cfg.make_grid();
  Vector x0 = cfg.x0;
  if (!x0_csv.empty()) x0 = parse_state(x0_csv);
  if (x0.size() != sys.state_dim) {
    throw ConfigError("--x0 dimension does not match the bundled system");
  }
  const auto batch = revsteer::simulate_controlled(
      sys, grid, rollouts, x0, bundle.controller.law(),
      revsteer::NoiseSource(seed));
  const std::string path =
      out.empty() ? (fs::path(bundle_dir) / "simulation.csv").string() : out;
  revsteer::write_trajectory_csv(batch, path);
  std::cout << "trajectories written to " << path << "\n";
  return kExitOk;
}

int cmd_evaluate(const std::string& bundle_dir, const std::string& config_path,
                 const std::string& seeds_csv, double delta,
                 const std::string& out) {
  auto bundle = revsteer::load_bundle(bundle_dir);
  RunConfig rc = bundle.config;
  if (!config_path.empty()) {
    // Evaluation settings (rollouts, seeds, metric flags) come from the
    // override config; the controller stays as bundled.
    RunConfig override_rc = revsteer::load_run_config(config_path);
    rc.experiment.rollouts = override_rc.experiment.rollouts;
    rc.experiment.seeds = override_rc.experiment.seeds;
    rc.experiment.wrap_angle = override_rc.experiment.wrap_angle;
    if (override_rc.delta >= 0.0) rc.delta = override_rc.delta;
  }
  if (!seeds_csv.empty()) {
    rc.experiment.seeds.clear();
    for (const double s : parse_value_list(seeds_csv)) {
      rc.experiment.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (delta >= 0.0) rc.delta = delta;

  const auto& cfg = rc.experiment;
  const auto sys = cfg.make_system();
  const auto grid = cfg.make_grid();
  const auto law = bundle.controller.law();

  revsteer::MetricsReport report;
  report.controller = bundle.controller_kind;
  report.dt = grid.dt();
  report.sigma = cfg.sigma;
  report.with_det_input = bundle.controller.det_input.kind() !=
                          revsteer::DeterministicInput::Kind::kZero;
  report.hash = revsteer::config_hash(cfg);
  report.cell_key = cfg.cell_key();
  for (const auto seed : cfg.seeds) {
    const auto batch = revsteer::simulate_controlled(
        sys, grid, cfg.rollouts, cfg.x0, law, revsteer::NoiseSource(seed));
    report.per_seed_mse.push_back(
        revsteer::mse(batch, cfg.x_f, cfg.wrap_angle));
    report.per_seed_unorm.push_back(revsteer::u_norm(batch));
  }
  auto mean_of = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  report.mse_mean = mean_of(report.per_seed_mse);
  report.mse_min = *std::min_element(report.per_seed_mse.begin(),
                                     report.per_seed_mse.end());
  report.mse_max = *std::max_element(report.per_seed_mse.begin(),
                                     report.per_seed_mse.end());
  report.unorm_mean = mean_of(report.per_seed_unorm);
  report.unorm_min = *std::min_element(report.per_seed_unorm.begin(),
                                       report.per_seed_unorm.end());
  report.unorm_max = *std::max_element(report.per_seed_unorm.begin(),
                                       report.per_seed_unorm.end());

  const std::string path =
      out.empty() ? (fs::path(bundle_dir) / "metrics.json").string() : out;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << revsteer::metrics_to_json(report).dump(2) << "\n";

  std::cout << "mse_mean " << report.mse_mean << "\n"
            << "unorm_mean " << report.unorm_mean << "\n"
            << "report written to " << path << "\n";
  if (rc.delta >= 0.0 && report.mse_mean > rc.delta) {
    std::cout << "tolerance exceeded: mse_mean > delta = " << rc.delta << "\n";
    return 1;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, const std::string& out) {
  RunConfig rc = revsteer::load_run_config(config_path);
  const std::vector<double> values = parse_value_list(values_csv);
  if (values.empty()) throw ConfigError("sweep: empty --values list");
  if (param != "dt" && param != "sigma") {
    throw ConfigError("sweep: --param must be dt or sigma");
  }
  const std::string dir = resolve_out_dir(rc, out);
  fs::create_directories(dir);
  const std::string table_path =
      (fs::path(dir) / ("sweep_" + param + ".jsonl")).string();

  // Resumability: cells whose hash is already present are skipped.
  std::set<std::string> done;
  {
    std::ifstream is(table_path);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      try {
        done.insert(Json::parse(line).at("hash").get<std::string>());
      } catch (...) {
        throw ConfigError("sweep: corrupted table " + table_path);
      }
    }
  }

  std::ofstream os(table_path, std::ios::app);
  if (!os) throw ConfigError("cannot open '" + table_path + "' for writing");

  int ran = 0, skipped = 0;
  auto run_cell = [&](const revsteer::ExperimentConfig& cell) {
    const std::string hash = revsteer::config_hash(cell);
    if (done.count(hash)) {
      ++skipped;
      return;
    }
    const auto report = revsteer::run_experiment(cell);
    os << revsteer::metrics_to_json(report).dump() << "\n";
    os.flush();
    done.insert(hash);
    ++ran;
  };

  for (const double value : values) {
    for (const auto kind : rc.sweep_controllers) {
      revsteer::ExperimentConfig cell = rc.experiment;
      cell.source = kind;
      if (param == "dt") {
        cell.dt = value;
      } else {
        cell.sigma = value;
      }
      run_cell(cell);
      if (param == "sigma" &&
          cell.det_input.kind() !=
              revsteer::DeterministicInput::Kind::kZero) {
        revsteer::ExperimentConfig no_input = cell;
        no_input.det_input = revsteer::DeterministicInput::zero(
            cell.det_input.control_dim());
        run_cell(no_input);
      }
    }
  }
  std::cout << "sweep table " << table_path << " (" << ran << " cells run, "
            << skipped << " skipped)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-based finite-time steering of control-affine SDEs"};
  app.require_subcommand(1);

  std::string config_path, bundle_dir, out, x0_csv, seeds_csv, param,
      values_csv;
  std::uint64_t seed = 12345;
  bool seed_set = false;
  bool save_z = false;
  int rollouts = 1;
  double delta = -1.0;

  auto* synth = app.add_subcommand("synthesize",
                                   "Simulate the auxiliary process, train "
                                   "the score model, write a controller "
                                   "bundle");
  synth->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  synth->add_option("--seed", seed, "override the synthesis seed")
      ->each([&](const std::string&) { seed_set = true; });
  synth->add_option("--out", out, "bundle output directory");
  synth->add_flag("--save-z", save_z, "also persist the auxiliary batch CSV");

  auto* sim = app.add_subcommand("simulate",
                                 "Roll out the closed loop from a bundle");
  sim->add_option("--bundle", bundle_dir, "bundle directory")->required();
  sim->add_option("--x0", x0_csv, "initial state, comma-separated");
  sim->add_option("--n", rollouts, "number of rollouts");
  sim->add_option("--seed", seed, "rollout noise seed");
  sim->add_option("--out", out, "trajectory CSV path");

  auto* eval = app.add_subcommand("evaluate",
                                  "Roll out and report MSE / control energy");
  eval->add_option("--bundle", bundle_dir, "bundle directory")->required();
  eval->add_option("--config", config_path, "evaluation override config");
  eval->add_option("--seeds", seeds_csv, "evaluation seeds, comma-separated");
  eval->add_option("--delta", delta,
                   "exit nonzero unless mean MSE <= this tolerance");
  eval->add_option("--out", out, "metrics JSON path");

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep over dt or sigma");
  sweep->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  sweep->add_option("--param", param, "dt or sigma")->required();
  sweep->add_option("--values", values_csv, "comma-separated values")
      ->required();
  sweep->add_option("--out", out, "table output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) {
      return cmd_synthesize(
          config_path,
          seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, out,
          save_z);
    }
    if (sim->parsed()) {
      return cmd_simulate(bundle_dir, x0_csv, rollouts, seed, out);
    }
    if (eval->parsed()) {
      return cmd_evaluate(bundle_dir, config_path, seeds_csv, delta, out);
    }
    if (sweep->parsed()) {
      return cmd_sweep(config_path, param, values_csv, out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const revsteer::NotFoundError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const revsteer::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
