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

// Acceptance harness: one pass/fail line per criterion. Run with no
// arguments for the full suite, or with criterion numbers to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "revsteer/revsteer.hpp"
#include "testing_util.hpp"

namespace {

using namespace revsteer;
using revsteer::testing::vec2;

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

struct SampleStats {
  double mean = 0.0;
  double se = 0.0;
};

SampleStats mean_and_se(const std::vector<double>& values) {
  SampleStats out;
  const double n = static_cast<double>(values.size());
  for (const double v : values) out.mean += v;
  out.mean /= n;
  double var = 0.0;
  for (const double v : values) var += (v - out.mean) * (v - out.mean);
  var /= (n - 1.0);
  out.se = std::sqrt(var / n);
  return out;
}

std::vector<double> terminal_sq_errors(const TrajectoryBatch& batch,
                                       const Vector& x_f) {
  std::vector<double> out(batch.count());
  for (int i = 0; i < batch.count(); ++i) {
    out[i] = (batch.terminal_state(i) - x_f).squaredNorm();
  }
  return out;
}

// --------------------------------------------------------------------------
// 1. Terminal-error prediction vs Monte Carlo for the regularized bridge law.

Check criterion1() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  setenv("REVSTEER_THREADS", "1", 1);

  const double eps = 0.3, sigma = 0.1;
  const LinearSystem lin(Matrix::Zero(2, 2), Matrix::Identity(2, 2), eps);
  const auto sys = builtin_system("brownian2d", {}, eps);
  const TimeGrid grid(1.0, 0.001);
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);

  const auto pred = predicted_terminal_error(lin, x0, x_f, sigma, 1.0);
  c.require(std::abs(pred.total - 0.098) < 1e-9,
            "closed form total != 0.098 (" + fmt(pred.total) + ")");
  c.require(std::abs(pred.bias_sq - 0.080) < 1e-9, "bias^2 != 0.080");
  c.require(std::abs(pred.variance - 0.018) < 1e-9, "variance != 0.018");

  const auto ctrl = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::zero(2));
  const auto batch = simulate_controlled(sys, grid, 10000, x0, ctrl.law(),
                                         NoiseSource(4001));
  const auto stats = mean_and_se(terminal_sq_errors(batch, x_f));
  c.note("MC " + fmt(stats.mean) + " vs 0.098, 3SE " + fmt(3 * stats.se));
  c.require(std::abs(stats.mean - 0.098) < 3.0 * stats.se,
            "MC mean outside 3 SE of 0.098");

  setenv("REVSTEER_THREADS", "0", 1);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  c.note("single-threaded " + fmt(elapsed) + " s");
  c.require(elapsed < 60.0, "runtime >= 60 s");
  return c;
}

// --------------------------------------------------------------------------
// 2. Time-reversal moment check for the scalar OU system.

Check criterion2() {
  Check c;
  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 1.0;
  const double eps = 0.3, sigma = 0.05;
  const LinearSystem lin(a, b, eps);
  SystemParams params{{"A", a}, {"B", b}};
  const auto sys = builtin_system("linear", params, eps);
  const TimeGrid grid(1.0, 0.0005);
  Vector x_f(1);
  x_f << 1.0;

  const auto mom = reverse_moments(lin, grid, x_f, sigma);
  const auto ctrl = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::zero(1));
  const int count = 20000;
  const int steps = grid.steps();
  const auto batch = simulate_controlled(
      sys, grid, count,
      InitialState::gaussian(mom.mean[steps], mom.reg_cov[steps]), ctrl.law(),
      NoiseSource(4002));

  for (const double t : {0.25, 0.5, 0.75}) {
    const int j = grid.index_nearest(t);
    const int rev = steps - j;
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < count; ++i) mean += batch.states[i](j, 0);
    mean /= count;
    for (int i = 0; i < count; ++i) {
      var += std::pow(batch.states[i](j, 0) - mean, 2);
    }
    var /= count - 1;
    const double q = mom.reg_cov[rev](0, 0);
    const double se_mean = std::sqrt(q / count);
    const double se_var = q * std::sqrt(2.0 / count);
    c.note("t=" + fmt(t) + ": mean " + fmt(mean) + "/" + fmt(mom.mean[rev][0]) +
           ", var " + fmt(var) + "/" + fmt(q));
    c.require(std::abs(mean - mom.mean[rev][0]) < 4.0 * se_mean,
              "mean off at t=" + fmt(t));
    c.require(std::abs(var - q) < 4.0 * se_var, "variance off at t=" + fmt(t));
  }
  return c;
}

// --------------------------------------------------------------------------
// 3. Gradient, divergence, and frak_g oracles.

Check criterion3() {
  Check c;
  const auto smooth = revsteer::testing::smooth_test_system(0.3);
  const auto constant = builtin_system("brownian2d", {}, 0.3);
  NoiseStream rng = NoiseSource(4003).stream(0);

  // ISM parameter gradient vs central finite differences, 20 directions.
  {
    PointBatch batch;
    const int count = 48;
    batch.x.resize(2, count);
    for (int p = 0; p < count; ++p) {
      batch.t.push_back(rng.uniform01());
      batch.x.col(p) = vec2(0.3, -0.2) + 0.8 * rng.normal_vector(2);
    }
    double worst = 0.0;
    for (const auto* sys : {&constant, &smooth}) {
      MlpModel model(2, 2, 1.0, 4004);
      const Vector grad = loss_gradient(*sys, model, batch);
      const Eigen::VectorXd theta = model.params();
      const double h = 1e-5;
      for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd dir(theta.size());
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
        dir.normalize();
        model.set_params(theta + h * dir);
        const double up = ism_objective(*sys, model, batch);
        model.set_params(theta - h * dir);
        const double down = ism_objective(*sys, model, batch);
        model.set_params(theta);
        const double fd = (up - down) / (2.0 * h);
        const double rel = std::abs(fd - grad.dot(dir)) /
                           std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
    c.note("gradient rel err " + fmt(worst));
    c.require(worst <= 1e-4, "ISM gradient vs FD exceeds 1e-4");
  }

  // Model divergence vs finite-difference divergence at 100 probes.
  {
    const MlpModel model(2, 2, 1.0, 4005);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double t = rng.uniform01();
      const Vector x = 1.5 * rng.normal_vector(2);
      const auto* sys = (i % 2 == 0) ? &smooth : &constant;
      const double analytic = model_divergence(*sys, model, t, x);
      const double fd = revsteer::testing::fd_divergence(*sys, model, t, x);
      worst = std::max(worst,
                       std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
    }
    c.note("divergence rel err " + fmt(worst));
    c.require(worst <= 1e-4, "divergence vs FD exceeds 1e-4");
  }

  // frak_g vs its finite-difference evaluation at 100 probes.
  {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vector x = 2.0 * rng.normal_vector(2);
      const Vector analytic = eval_frak_g(smooth, x);
      Vector fd = Vector::Zero(2);
      Vector xp = x;
      const Matrix g = smooth.diffusion(x);
      for (int l = 0; l < 2; ++l) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[l]));
        xp[l] = x[l] + h;
        const Matrix gp = smooth.diffusion(xp);
        xp[l] = x[l] - h;
        const Matrix gm = smooth.diffusion(xp);
        xp[l] = x[l];
        fd += ((gp - gm) / (2.0 * h)) * g.row(l).transpose();
      }
      worst = std::max(worst, (analytic - fd).norm() /
                                  std::max(1.0, fd.norm()));
    }
    c.note("frak_g rel err " + fmt(worst));
    c.require(worst <= 1e-6, "frak_g vs FD exceeds 1e-6");
  }
  return c;
}

// --------------------------------------------------------------------------
// 4. Learned vs exact bridge controller, and
// 8. FeatureModel closed-form exactness (shares the trained network).

struct BridgeArtifacts {
  std::shared_ptr<MlpModel> model;
  SynthesizedController controller;
};

BridgeArtifacts train_bridge_mlp() {
  const double eps = 0.3, sigma = 0.1;
  const auto sys = builtin_system("brownian2d", {}, eps);
  const TimeGrid grid(1.0, 0.004);
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);
  const auto u = DeterministicInput::constant(x0 - x_f);
  const auto batch =
      simulate_auxiliary(sys, grid, 1000, x_f, sigma, u, NoiseSource(4101));

  auto model = std::make_shared<MlpModel>(2, 2, 1.0, 4102);
  TrainConfig cfg;
  cfg.iterations = 10000;
  cfg.learning_rate = 1e-3;
  cfg.seed = 4103;
  train(sys, *model, batch, cfg);
  return {model, SynthesizedController{model, sys, grid, u, eps}};
}

Check criterion4(const BridgeArtifacts& art) {
  Check c;
  const double eps = 0.3, sigma = 0.1;
  const auto& grid = art.controller.grid;
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);

  double worst = 0.0;
  double worst_t = 0.0;
  for (int j = 0; j <= grid.steps() - 1; j += (j < 225 ? 5 : 1)) {
    const double t = grid.time(j);
    const double s = grid.horizon() - t;
    const double q = eps * eps * s + sigma * sigma;
    const Vector mean = x_f + s * (x0 - x_f);
    for (int a = -2; a <= 2; ++a) {
      for (int b = -2; b <= 2; ++b) {
        const Vector x = mean + std::sqrt(q) * vec2(a, b);
        const Vector learned = art.controller.eval(t, x);
        const Vector exact =
            brownian_bridge_control(x0, x_f, eps, sigma, 1.0, t, x);
        const double dev = (learned - exact).cwiseAbs().maxCoeff();
        if (dev > worst) {
          worst = dev;
          worst_t = t;
        }
      }
    }
  }
  c.note("max tube deviation " + fmt(worst) + " at t=" + fmt(worst_t));
  c.require(worst <= 0.1, "tube deviation exceeds 0.1");

  const auto sys = builtin_system("brownian2d", {}, eps);
  const LinearSystem lin(Matrix::Zero(2, 2), Matrix::Identity(2, 2), eps);
  const auto exact_ctrl = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::constant(x0 - x_f));
  double mse_learned = 0.0, mse_exact = 0.0;
  for (const std::uint64_t seed : {4111, 4112, 4113, 4114, 4115}) {
    const auto bl = simulate_controlled(sys, grid, 1000, x0,
                                        art.controller.law(),
                                        NoiseSource(seed));
    const auto be = simulate_controlled(sys, grid, 1000, x0,
                                        exact_ctrl.law(), NoiseSource(seed));
    mse_learned += mse(bl, x_f);
    mse_exact += mse(be, x_f);
  }
  mse_learned /= 5.0;
  mse_exact /= 5.0;
  c.note("closed-loop MSE learned " + fmt(mse_learned) + " vs exact " +
         fmt(mse_exact));
  c.require(mse_learned <= 1.5 * mse_exact,
            "learned MSE exceeds 1.5x exact");
  return c;
}

Check criterion8(const BridgeArtifacts& art) {
  Check c;
  const double eps = 0.3, sigma = 0.1;
  const auto sys = builtin_system("brownian2d", {}, eps);
  const TimeGrid grid(1.0, 0.05);
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);
  const auto u = DeterministicInput::constant(x0 - x_f);
  const auto batch =
      simulate_auxiliary(sys, grid, 10000, x_f, sigma, u, NoiseSource(4801));

  const auto fit = fit_feature_model_closed_form(sys, batch);
  const int bin = fit.model.bin_of(0.5);
  const double q_half = eps * eps * 0.5 + sigma * sigma;
  const Matrix w_true = -Matrix::Identity(2, 2) / q_half;
  const double rel = (fit.model.weight(bin) - w_true).operatorNorm() /
                     w_true.operatorNorm();
  c.note("affine coefficient rel err " + fmt(rel));
  c.require(rel <= 0.05, "coefficients off by more than 5%");

  // Same-bin points for the loss comparison.
  std::vector<int> nodes = {bin};
  std::vector<int> paths(batch.count());
  std::iota(paths.begin(), paths.end(), 0);
  const auto points = PointBatch::from_trajectories(batch, nodes, paths);
  const double loss_fit = ism_objective(sys, fit.model, points);
  const double loss_mlp = ism_objective(sys, *art.model, points);
  c.note("bin loss closed form " + fmt(loss_fit) + " vs mlp " +
         fmt(loss_mlp));
  c.require(loss_fit <= loss_mlp, "closed-form loss above the MLP loss");
  return c;
}

// --------------------------------------------------------------------------
// 5. dt sweep trend with sigma = 0.

Check criterion5() {
  Check c;
  ExperimentConfig cfg;
  cfg.system_name = "brownian2d";
  cfg.epsilon = 0.3;
  cfg.x0 = vec2(0.0, 0.0);
  cfg.x_f = vec2(2.0, 2.0);
  cfg.horizon = 1.0;
  cfg.sigma = 0.0;
  cfg.det_input = DeterministicInput::constant(vec2(-2.0, -2.0));
  cfg.rollouts = 1000;
  cfg.seeds = {4501, 4502, 4503, 4504, 4505};

  const std::vector<double> dts = {0.032, 0.016, 0.008, 0.004};
  const auto rows = sweep_dt(cfg, dts,
                             {ControllerSource::kExactLinear,
                              ControllerSource::kOpenLoop});
  std::vector<double> exact_mse;
  std::string exact_series = "exact MSE:";
  for (const auto& row : rows) {
    if (row.controller == "exact-linear") {
      exact_mse.push_back(row.mse_mean);
      exact_series += " " + fmt(row.mse_mean);
    } else {
      c.require(std::abs(row.mse_mean - 0.18) <
                    3.0 * 0.18 * std::sqrt(2.0 / 5000.0),
                "open-loop MSE off 0.18 at dt=" + fmt(row.dt) + " (" +
                    fmt(row.mse_mean) + ")");
    }
  }
  c.note(exact_series);
  for (std::size_t i = 1; i < exact_mse.size(); ++i) {
    c.require(exact_mse[i] < exact_mse[i - 1],
              "exact MSE not strictly decreasing in dt");
  }
  return c;
}

// --------------------------------------------------------------------------
// 6. Pendulum steering with the learned controller.

Check criterion6() {
  Check c;
  const double eps = 0.3;
  const auto sys = builtin_system("pendulum", {}, eps);
  const TimeGrid grid(5.0, 0.004);
  const Vector x0 = vec2(M_PI, 0.0);
  const Vector x_f = vec2(0.0, 0.0);
  const auto u = DeterministicInput::zero(1);
  const auto batch =
      simulate_auxiliary(sys, grid, 1000, x_f, 0.0, u, NoiseSource(4601));

  auto model = std::make_shared<MlpModel>(2, 1, 5.0, 4602);
  TrainConfig cfg;
  cfg.k1_override = 32;
  cfg.iterations = 8000;
  cfg.learning_rate = 1e-3;
  cfg.seed = 4603;
  train(sys, *model, batch, cfg);
  const SynthesizedController ctrl{model, sys, grid, u, eps};

  const auto rollout =
      simulate_controlled(sys, grid, 1000, x0, ctrl.law(), NoiseSource(4604));
  const double wrapped_mse = mse(rollout, x_f, true);
  int within = 0;
  for (int i = 0; i < rollout.count(); ++i) {
    if (std::abs(wrap_angle_to_pi(rollout.terminal_state(i)[0])) <= 0.3) {
      ++within;
    }
  }
  const double frac = static_cast<double>(within) / rollout.count();
  c.note("wrapped MSE " + fmt(wrapped_mse) + ", " + fmt(100.0 * frac) +
         "% within 0.3");
  c.require(wrapped_mse <= 0.1, "wrapped terminal MSE exceeds 0.1");
  c.require(frac >= 0.95, "fewer than 95% of paths near the target angle");
  return c;
}

// --------------------------------------------------------------------------
// 7. sigma sweeps: MSE nondecreasing, U_norm nonincreasing, input helps.

Check criterion7() {
  Check c;
  ExperimentConfig cfg;
  cfg.system_name = "brownian2d";
  cfg.epsilon = 0.3;
  cfg.x0 = vec2(0.0, 0.0);
  cfg.x_f = vec2(2.0, 2.0);
  cfg.horizon = 1.0;
  cfg.dt = 0.004;
  cfg.det_input = DeterministicInput::constant(vec2(-2.0, -2.0));
  cfg.rollouts = 1000;
  cfg.seeds = {4701, 4702, 4703, 4704, 4705};

  const std::vector<double> sigmas = {0.02, 0.05, 0.1, 0.2, 0.3};
  const auto rows =
      sweep_sigma(cfg, sigmas, {ControllerSource::kExactLinear});

  std::vector<double> mse_with, unorm_with, mse_without;
  for (const auto& row : rows) {
    if (row.with_det_input) {
      mse_with.push_back(row.mse_mean);
      unorm_with.push_back(row.unorm_mean);
    } else {
      mse_without.push_back(row.mse_mean);
    }
  }
  std::string series = "MSE(u):";
  for (const double v : mse_with) series += " " + fmt(v);
  series += "; Unorm:";
  for (const double v : unorm_with) series += " " + fmt(v);
  c.note(series);

  for (std::size_t i = 1; i < mse_with.size(); ++i) {
    c.require(mse_with[i] >= mse_with[i - 1],
              "MSE not nondecreasing in sigma");
    c.require(unorm_with[i] <= unorm_with[i - 1],
              "U_norm not nonincreasing in sigma");
  }
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    c.require(mse_with[i] <= mse_without[i],
              "input does not reduce MSE at sigma=" + fmt(sigmas[i]));
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return selected.empty() || selected.count(n); };

  struct Row {
    int id;
    std::string name;
    Check result;
  };
  std::vector<Row> rows;
  auto run = [&](int id, const std::string& name,
                 const std::function<Check()>& fn) {
    if (!wanted(id)) return;
    Check result;
    try {
      result = fn();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s (%s)\n", result.ok ? "PASS" : "FAIL",
                id, name.c_str(), result.detail.c_str());
    std::fflush(stdout);
    rows.push_back({id, name, result});
  };

  run(1, "terminal-error prediction vs Monte Carlo", criterion1);
  run(2, "time-reversal moment check (scalar OU)", criterion2);
  run(3, "gradient / divergence / frak_g oracles", criterion3);

  BridgeArtifacts bridge{nullptr,
                         SynthesizedController{nullptr,
                                               ControlAffineSystem{},
                                               TimeGrid(1.0, 1.0),
                                               DeterministicInput{}, 0.0}};
  if (wanted(4) || wanted(8)) {
    std::printf("... training the bridge network\n");
    std::fflush(stdout);
    bridge = train_bridge_mlp();
  }
  run(4, "learned vs exact bridge controller",
      [&] { return criterion4(bridge); });
  run(5, "dt sweep trend", criterion5);
  run(6, "pendulum steering", criterion6);
  run(7, "sigma sweep trends", criterion7);
  run(8, "affine closed-form exactness", [&] { return criterion8(bridge); });

  int failures = 0;
  for (const auto& row : rows) failures += row.result.ok ? 0 : 1;
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
