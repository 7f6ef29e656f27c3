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

#include "revsteer/synthesis.hpp"

#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "revsteer/bench.hpp"
#include "testing_util.hpp"

using revsteer::brownian_bridge_control;
using revsteer::builtin_system;
using revsteer::DeterministicInput;
using revsteer::exact_control;
using revsteer::InitialState;
using revsteer::LinearSystem;
using revsteer::make_analytic_bridge_controller;
using revsteer::make_exact_linear_controller;
using revsteer::make_open_loop_controller;
using revsteer::Matrix;
using revsteer::MlpModel;
using revsteer::ModelKind;
using revsteer::NoiseSource;
using revsteer::predicted_terminal_error;
using revsteer::reverse_moments;
using revsteer::simulate_controlled;
using revsteer::SynthesizedController;
using revsteer::TimeGrid;
using revsteer::TrainConfig;
using revsteer::Vector;
using revsteer::testing::vec2;

TEST_CASE("controller with zero input is exactly eps^2 model(T - t, x)") {
  const auto sys = builtin_system("brownian2d", {}, 0.3);
  const TimeGrid grid(1.0, 0.1);
  auto model = std::make_shared<MlpModel>(2, 2, 1.0, 5);
  const SynthesizedController ctrl{model, sys, grid,
                                   DeterministicInput::zero(2), 0.3};
  for (int j = 0; j < grid.steps(); ++j) {
    const double t = grid.time(j);
    const Vector x = vec2(0.3 * j, -0.1 * j);
    const Vector expected = 0.09 * model->value(grid.time(grid.steps() - j), x);
    CHECK((ctrl.eval(t, x) - expected).norm() == 0.0);
  }
  CHECK_THROWS_AS(ctrl.eval(1.0, vec2(0, 0)), std::out_of_range);
  CHECK_THROWS_AS(ctrl.eval(-0.01, vec2(0, 0)), std::out_of_range);
}

TEST_CASE("reversed deterministic input is applied index-wise") {
  const auto sys = builtin_system("brownian2d", {}, 0.3);
  const TimeGrid grid(1.0, 0.25);
  std::vector<Vector> table;
  for (int j = 0; j <= 4; ++j) table.push_back(vec2(j, 10.0 * j));
  const auto ctrl = make_open_loop_controller(
      sys, grid, DeterministicInput::table(table));
  for (int j = 0; j < 4; ++j) {
    // u_tilde(t_j) = -u(T - t_j) = -table[steps - j]
    const Vector expected = -table[4 - j];
    CHECK((ctrl.eval(grid.time(j), vec2(0, 0)) - expected).norm() == 0.0);
  }
}

TEST_CASE("exact linear controller reproduces the closed-form law") {
  const auto lin = LinearSystem(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                0.3);
  const TimeGrid grid(1.0, 0.004);
  const Vector x_f = vec2(2.0, 2.0);
  const auto u = DeterministicInput::zero(2);

  for (const double sigma : {0.0, 0.1}) {
    const auto ctrl = make_exact_linear_controller(lin, grid, x_f, sigma, u);
    const auto mom = reverse_moments(lin, grid, x_f, sigma);
    for (const double t : {0.0, 0.052, 0.5, 0.996}) {
      for (const double dx : {-0.7, 0.0, 1.3}) {
        const Vector x = x_f + vec2(dx, -0.5 * dx);
        const Vector expected = exact_control(lin, mom, t, x);
        CHECK((ctrl.eval(t, x) - expected).norm() <= 1e-12);
      }
    }
  }
}

TEST_CASE("assembled bridge law equals the closed-form bridge control") {
  const auto lin = LinearSystem(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                0.3);
  const TimeGrid grid(1.0, 0.004);
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);
  const auto u = DeterministicInput::constant(x0 - x_f);
  const auto sys = builtin_system("brownian2d", {}, 0.3);

  for (const double sigma : {0.0, 0.1}) {
    const auto exact = make_exact_linear_controller(lin, grid, x_f, sigma, u);
    const auto bridge = make_analytic_bridge_controller(sys, grid, x0, x_f,
                                                        sigma);
    for (int j = 0; j < grid.steps(); j += 17) {
      const double t = grid.time(j);
      for (const double a : {-1.0, 0.2, 1.4}) {
        const Vector x = vec2(2.0 * a - 1.0, a);
        const Vector reference =
            brownian_bridge_control(x0, x_f, 0.3, sigma, 1.0, t, x);
        CHECK((exact.eval(t, x) - reference).norm() <= 1e-12);
        CHECK((bridge.eval(t, x) - reference).norm() <= 1e-12);
      }
    }
  }
}

TEST_CASE("synthesize completes in the degenerate smoke configuration") {
  const auto sys = builtin_system("brownian2d", {}, 0.3);
  const TimeGrid grid(0.5, 0.05);
  TrainConfig cfg;
  cfg.iterations = 1;
  cfg.k2 = 32;
  cfg.seed = 3;
  const auto result = revsteer::synthesize(
      sys, grid, vec2(1.0, 1.0), 0.1, DeterministicInput::zero(2), 32, cfg,
      7);
  CHECK(result.loss_history.size() == 1);
  CHECK(result.z_batch.count() == 32);
  const Vector u = result.controller.eval(0.2, vec2(0.5, 0.5));
  CHECK(u.allFinite());

  TrainConfig bad = cfg;
  bad.k2 = 64;
  CHECK_THROWS_AS(
      revsteer::synthesize(sys, grid, vec2(1.0, 1.0), 0.1,
                           DeterministicInput::zero(2), 32, bad, 7),
      std::invalid_argument);
}

TEST_CASE("closed loop under the exact law matches the predicted terminal law") {
  // Desk-scale reversal consistency: X_T ~ N(mu, P).
  const auto lin = LinearSystem(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                0.3);
  const auto sys = builtin_system("brownian2d", {}, 0.3);
  const TimeGrid grid(1.0, 0.002);
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);
  const double sigma = 0.1;

  const auto ctrl = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::zero(2));
  const int count = 4000;
  const auto batch =
      simulate_controlled(sys, grid, count, x0, ctrl.law(), NoiseSource(13));

  const auto pred = predicted_terminal_error(lin, x0, x_f, sigma, 1.0);
  Vector mean = Vector::Zero(2);
  for (int i = 0; i < count; ++i) mean += batch.terminal_state(i);
  mean /= count;
  Matrix cov = Matrix::Zero(2, 2);
  for (int i = 0; i < count; ++i) {
    const Vector d = batch.terminal_state(i) - mean;
    cov += d * d.transpose();
  }
  cov /= count - 1;

  for (int k = 0; k < 2; ++k) {
    const double se_mean = std::sqrt(pred.P(k, k) / count);
    CHECK(std::abs(mean[k] - pred.mu[k]) <
          4.0 * se_mean + 0.01 * std::sqrt(pred.P(k, k)));
    const double se_var = pred.P(k, k) * std::sqrt(2.0 / count);
    CHECK(std::abs(cov(k, k) - pred.P(k, k)) <
          4.0 * se_var + 0.02 * pred.P(k, k));
  }
}

TEST_CASE("reverse-simulated OU process matches the auxiliary moments") {
  // Kernel identity at desk scale: starting the closed loop from the
  // auxiliary terminal law reproduces Z_{T-t} marginals.
  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 1.0;
  const LinearSystem lin(a, b, 0.3);
  revsteer::SystemParams params{{"A", a}, {"B", b}};
  const auto sys = builtin_system("linear", params, 0.3);
  const TimeGrid grid(1.0, 0.002);
  Vector x_f(1);
  x_f << 1.0;
  const double sigma = 0.05;

  const auto mom = reverse_moments(lin, grid, x_f, sigma);
  const auto ctrl = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::zero(1));

  const int count = 6000;
  const int steps = grid.steps();
  const auto batch = simulate_controlled(
      sys, grid, count,
      InitialState::gaussian(mom.mean[steps], mom.reg_cov[steps]),
      ctrl.law(), NoiseSource(17));

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
    CHECK(std::abs(mean - mom.mean[rev][0]) <
          4.0 * std::sqrt(q / count) + 0.01 * std::sqrt(q));
    CHECK(std::abs(var - q) < 4.0 * q * std::sqrt(2.0 / count) + 0.02 * q);
  }
}

TEST_CASE("deterministic input reduces the closed-loop bias") {
  const auto lin = LinearSystem(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                                0.3);
  const auto sys = builtin_system("brownian2d", {}, 0.3);
  const TimeGrid grid(1.0, 0.004);
  const Vector x0 = vec2(0.0, 0.0);
  const Vector x_f = vec2(2.0, 2.0);
  const double sigma = 0.1;
  const int count = 2000;

  const auto with_input = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::constant(x0 - x_f));
  const auto without_input = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::zero(2));

  const auto batch_u = simulate_controlled(sys, grid, count, x0,
                                           with_input.law(), NoiseSource(19));
  const auto batch_0 = simulate_controlled(
      sys, grid, count, x0, without_input.law(), NoiseSource(19));

  const double mse_u = revsteer::mse(batch_u, x_f);
  const double mse_0 = revsteer::mse(batch_0, x_f);
  CHECK(mse_u < mse_0);
}

TEST_CASE("double integrator closed loop matches the predicted error") {
  Matrix a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  const LinearSystem lin(a, b, 0.3);
  revsteer::SystemParams params{{"A", a}, {"B", b}};
  const auto sys = builtin_system("linear", params, 0.3);
  const TimeGrid grid(1.0, 0.002);
  const Vector x0 = vec2(0.5, -0.3);
  const Vector x_f = vec2(0.0, 0.4);
  const double sigma = 0.05;

  const auto ctrl = make_exact_linear_controller(
      lin, grid, x_f, sigma, DeterministicInput::zero(1));
  const int count = 4000;
  const auto batch =
      simulate_controlled(sys, grid, count, x0, ctrl.law(), NoiseSource(23));

  const auto pred = predicted_terminal_error(lin, x0, x_f, sigma, 1.0);
  double total = 0.0, sq = 0.0;
  for (int i = 0; i < count; ++i) {
    const double e = (batch.terminal_state(i) - x_f).squaredNorm();
    total += e;
    sq += e * e;
  }
  total /= count;
  const double se = std::sqrt((sq / count - total * total) / (count - 1));
  CHECK(std::abs(total - pred.total) < 3.0 * se + 0.02 * pred.total);
}
