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

#ifndef REVSTEER_BENCH_HPP_
#define REVSTEER_BENCH_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "revsteer/det_input.hpp"
#include "revsteer/dynamics.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/lingauss.hpp"
#include "revsteer/sde_sim.hpp"
#include "revsteer/synthesis.hpp"
#include "revsteer/time_grid.hpp"
#include "revsteer/train.hpp"
#include "revsteer/trajectory.hpp"

namespace revsteer {

enum class ControllerSource { kLearned, kExactLinear, kOpenLoop, kAnalyticBridge };

inline std::string to_string(ControllerSource source) {
  switch (source) {
    case ControllerSource::kLearned:
      return "learned";
    case ControllerSource::kExactLinear:
      return "exact-linear";
    case ControllerSource::kOpenLoop:
      return "open-loop";
    case ControllerSource::kAnalyticBridge:
      return "analytic-bridge";
  }
  return "unknown";
}

inline ControllerSource controller_source_from_string(const std::string& s) {
  if (s == "learned") return ControllerSource::kLearned;
  if (s == "exact-linear") return ControllerSource::kExactLinear;
  if (s == "open-loop") return ControllerSource::kOpenLoop;
  if (s == "analytic-bridge") return ControllerSource::kAnalyticBridge;
  throw ConfigError("unknown controller source '" + s + "'");
}

inline double wrap_angle_to_pi(double a) {
  const double two_pi = 2.0 * M_PI;
  double r = std::fmod(a, two_pi);
  if (r <= -M_PI) r += two_pi;
  if (r > M_PI) r -= two_pi;
  return r;
}

// (1/N) sum_i |X_T^i - x_f|^2. With wrap_first_coordinate the first state
// component is treated as an angle and the deviation is reduced mod 2 pi to
// (-pi, pi].
inline double mse(const TrajectoryBatch& batch, const Vector& x_f,
                  bool wrap_first_coordinate = false) {
  if (x_f.size() != batch.state_dim) {
    throw std::invalid_argument("mse: x_f has wrong dimension");
  }
  double acc = 0.0;
  for (int i = 0; i < batch.count(); ++i) {
    Vector dev = batch.terminal_state(i) - x_f;
    if (wrap_first_coordinate) dev[0] = wrap_angle_to_pi(dev[0]);
    acc += dev.squaredNorm();
  }
  return acc / batch.count();
}

// Averaged control energy (1/N) sum_i sum_steps |U|^2 dt.
inline double u_norm(const TrajectoryBatch& batch) {
  if (!batch.has_controls()) {
    throw std::invalid_argument("u_norm: batch has no recorded controls");
  }
  double acc = 0.0;
  for (int i = 0; i < batch.count(); ++i) {
    acc += batch.controls[i].squaredNorm();
  }
  return acc * batch.grid.dt() / batch.count();
}

struct ExperimentConfig {
  std::string system_name = "brownian2d";
  SystemParams system_params;
  double epsilon = 0.3;

  Vector x0;
  Vector x_f;
  double horizon = 1.0;
  double dt = 0.004;
  double sigma = 0.0;
  DeterministicInput det_input;

  ControllerSource source = ControllerSource::kLearned;
  int train_trajectories = 1000;
  TrainConfig train;
  std::uint64_t synthesis_seed = 1;

  int rollouts = 1000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool wrap_angle = false;

  ControlAffineSystem make_system() const {
    return builtin_system(system_name, system_params, epsilon);
  }

  TimeGrid make_grid() const { return TimeGrid::from_nominal(horizon, dt); }

  // Linear closed forms exist only for the linear-Gaussian systems.
  LinearSystem make_linear_system() const {
    if (system_name == "brownian2d") {
      return LinearSystem(Matrix::Zero(2, 2), Matrix::Identity(2, 2), epsilon);
    }
    if (system_name == "linear") {
      return LinearSystem(system_params.at("A"), system_params.at("B"),
                          epsilon);
    }
    throw ConfigError("system '" + system_name +
                      "' has no exact linear controller");
  }

  void validate() const {
    if (x0.size() == 0 || x_f.size() == 0 || x0.size() != x_f.size()) {
      throw ConfigError("experiment: x0/xf missing or inconsistent");
    }
    if (sigma < 0.0) throw ConfigError("experiment: sigma < 0");
    if (rollouts < 1) throw ConfigError("experiment: rollouts < 1");
    if (seeds.empty()) throw ConfigError("experiment: seeds list is empty");
  }

  std::string cell_key() const {
    std::ostringstream os;
    os << system_name << "|eps=" << format_double(epsilon)
       << "|T=" << format_double(horizon) << "|dt=" << format_double(dt)
       << "|sigma=" << format_double(sigma) << "|src=" << to_string(source)
       << "|x0=";
    for (int i = 0; i < x0.size(); ++i) os << format_double(x0[i]) << ",";
    os << "|xf=";
    for (int i = 0; i < x_f.size(); ++i) os << format_double(x_f[i]) << ",";
    os << "|u=" << static_cast<int>(det_input.kind())
       << "|N=" << train_trajectories << "|roll=" << rollouts << "|seeds=";
    for (const auto s : seeds) os << s << ",";
    os << "|iters=" << train.iterations << "|model="
       << to_string(train.model_kind);
    return os.str();
  }
};

// FNV-1a over the canonical cell key.
inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string key = cfg.cell_key();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

struct MetricsReport {
  std::string controller;
  double dt = 0.0;
  double sigma = 0.0;
  bool with_det_input = false;
  std::vector<double> per_seed_mse;
  std::vector<double> per_seed_unorm;
  double mse_mean = 0.0, mse_min = 0.0, mse_max = 0.0;
  double unorm_mean = 0.0, unorm_min = 0.0, unorm_max = 0.0;
  double runtime_seconds = 0.0;
  std::string hash;
  std::string cell_key;
};

inline SynthesizedController build_controller(const ExperimentConfig& cfg) {
  const ControlAffineSystem sys = cfg.make_system();
  const TimeGrid grid = cfg.make_grid();
  DeterministicInput u = cfg.det_input;
  if (u.control_dim() == 0) u = DeterministicInput::zero(sys.control_dim);
  switch (cfg.source) {
    case ControllerSource::kLearned: {
      SynthesisResult result =
          synthesize(sys, grid, cfg.x_f, cfg.sigma, u, cfg.train_trajectories,
                     cfg.train, cfg.synthesis_seed);
      return std::move(result.controller);
    }
    case ControllerSource::kExactLinear:
      return make_exact_linear_controller(cfg.make_linear_system(), grid,
                                          cfg.x_f, cfg.sigma, u);
    case ControllerSource::kOpenLoop:
      return make_open_loop_controller(sys, grid, u);
    case ControllerSource::kAnalyticBridge:
      return make_analytic_bridge_controller(sys, grid, cfg.x0, cfg.x_f,
                                             cfg.sigma);
  }
  throw ConfigError("experiment: unknown controller source");
}

// Synthesizes (or constructs) the controller once, then rolls out the
// closed loop under each evaluation seed. Evaluation seeds are disjoint
// from the synthesis seed by convention (fresh NoiseSource per seed).
inline MetricsReport run_experiment(
    const ExperimentConfig& cfg, const std::string& trajectory_dir = "",
    std::vector<TrajectoryBatch>* collected = nullptr) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const ControlAffineSystem sys = cfg.make_system();
  const TimeGrid grid = cfg.make_grid();
  const SynthesizedController ctrl = build_controller(cfg);
  const ControlLaw law = ctrl.law();

  MetricsReport report;
  report.controller = to_string(cfg.source);
  report.dt = grid.dt();
  report.sigma = cfg.sigma;
  report.with_det_input =
      ctrl.det_input.kind() != DeterministicInput::Kind::kZero;
  report.hash = config_hash(cfg);
  report.cell_key = cfg.cell_key();

  for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
    TrajectoryBatch batch = [&] {
      try {
        return simulate_controlled(sys, grid, cfg.rollouts, cfg.x0, law,
                                   NoiseSource(cfg.seeds[s]));
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "experiment seed " << cfg.seeds[s] << ": " << e.what();
        throw NumericalError(msg.str());
      }
    }();
    report.per_seed_mse.push_back(mse(batch, cfg.x_f, cfg.wrap_angle));
    report.per_seed_unorm.push_back(u_norm(batch));
    if (!trajectory_dir.empty()) {
      write_trajectory_csv(batch, trajectory_dir + "/trajectories_seed" +
                                      std::to_string(cfg.seeds[s]) + ".csv");
    }
    if (collected != nullptr) collected->push_back(std::move(batch));
  }

  auto summarize = [](const std::vector<double>& v, double& mean, double& lo,
                      double& hi) {
    mean = 0.0;
    lo = v.front();
    hi = v.front();
    for (const double x : v) {
      mean += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    mean /= static_cast<double>(v.size());
  };
  summarize(report.per_seed_mse, report.mse_mean, report.mse_min,
            report.mse_max);
  summarize(report.per_seed_unorm, report.unorm_mean, report.unorm_min,
            report.unorm_max);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

// One row per (dt, controller kind); sigma is taken from cfg.
inline std::vector<MetricsReport> sweep_dt(
    const ExperimentConfig& cfg, const std::vector<double>& dt_values,
    const std::vector<ControllerSource>& kinds) {
  if (dt_values.empty()) throw ConfigError("sweep_dt: empty value list");
  std::vector<MetricsReport> rows;
  for (const double dt : dt_values) {
    for (const ControllerSource kind : kinds) {
      ExperimentConfig cell = cfg;
      cell.dt = dt;
      cell.source = kind;
      rows.push_back(run_experiment(cell));
    }
  }
  return rows;
}

// One row per (sigma, controller kind, input on/off); the "off" variant
// zeroes the deterministic input in both synthesis and deployment.
inline std::vector<MetricsReport> sweep_sigma(
    const ExperimentConfig& cfg, const std::vector<double>& sigma_values,
    const std::vector<ControllerSource>& kinds,
    bool include_zero_input_variant = true) {
  if (sigma_values.empty()) throw ConfigError("sweep_sigma: empty value list");
  std::vector<MetricsReport> rows;
  for (const double sigma : sigma_values) {
    for (const ControllerSource kind : kinds) {
      ExperimentConfig cell = cfg;
      cell.sigma = sigma;
      cell.source = kind;
      rows.push_back(run_experiment(cell));
      if (include_zero_input_variant &&
          cfg.det_input.kind() != DeterministicInput::Kind::kZero) {
        ExperimentConfig no_input = cell;
        no_input.det_input = DeterministicInput::zero(
            cfg.det_input.control_dim());
        rows.push_back(run_experiment(no_input));
      }
    }
  }
  return rows;
}

}  // namespace revsteer

#endif  // REVSTEER_BENCH_HPP_
