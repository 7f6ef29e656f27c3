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

#ifndef REVSTEER_SDE_SIM_HPP_
#define REVSTEER_SDE_SIM_HPP_

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "revsteer/det_input.hpp"
#include "revsteer/dynamics.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/rng.hpp"
#include "revsteer/threading.hpp"
#include "revsteer/time_grid.hpp"
#include "revsteer/trajectory.hpp"

namespace revsteer {

// Counter layout within each path's stream: blocks [0, kWienerBlockOffset)
// serve the initial-state draw, blocks from kWienerBlockOffset on serve the
// Wiener increments. Path i therefore depends only on (base_seed, i), and the
// increments are the same whether or not an initial draw was consumed.
inline constexpr std::uint64_t kWienerBlockOffset = std::uint64_t{1} << 20;

struct StepContext {
  int path = -1;
  int step = -1;
};

// One Euler-Maruyama update: x + drift_total * dt + eps * g(x) * dW, where
// dW must carry covariance dt * I_m.
inline Vector euler_maruyama_step(const ControlAffineSystem& sys,
                                  const Vector& x, const Vector& drift_total,
                                  const Vector& dW, double dt,
                                  StepContext ctx = {}) {
  sys.check_state(x);
  if (drift_total.size() != sys.state_dim || dW.size() != sys.control_dim) {
    throw std::invalid_argument("euler_maruyama_step: dimension mismatch");
  }
  Vector next = x + drift_total * dt + sys.epsilon * (sys.diffusion_at(x) * dW);
  if (!next.allFinite()) {
    std::ostringstream msg;
    msg << "euler_maruyama_step: non-finite state";
    if (ctx.path >= 0) msg << " on path " << ctx.path;
    if (ctx.step >= 0) msg << " at step " << ctx.step;
    throw NumericalError(msg.str());
  }
  return next;
}

// Simulates the auxiliary process Z backward-in-time-by-construction:
// dZ = (-f(Z) + eps^2 frak_g(Z) + g(Z) u_t) dt + eps g(Z) dW,
// Z_0 ~ N(x_f, sigma^2 I) (deterministic start when sigma = 0).
inline TrajectoryBatch simulate_auxiliary(const ControlAffineSystem& sys,
                                          const TimeGrid& grid, int count,
                                          const Vector& x_f, double sigma,
                                          const DeterministicInput& u,
                                          const NoiseSource& noise) {
  sys.check_state(x_f);
  if (count < 1) throw std::invalid_argument("simulate_auxiliary: count < 1");
  if (sigma < 0.0) throw std::invalid_argument("simulate_auxiliary: sigma < 0");
  if (u.control_dim() != sys.control_dim || !u.defined_on(grid)) {
    throw std::invalid_argument(
        "simulate_auxiliary: input schedule does not match system/grid");
  }
  const int steps = grid.steps();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  const double eps2 = sys.epsilon * sys.epsilon;

  std::vector<Vector> u_sched(steps);
  for (int j = 0; j < steps; ++j) u_sched[j] = u.at_index(grid, j);

  TrajectoryBatch batch(grid, sys.state_dim, sys.control_dim);
  batch.states.assign(count,
                      Eigen::MatrixXd::Zero(steps + 1, sys.state_dim));

  parallel_for(count, [&](std::int64_t i) {
    NoiseStream stream = noise.stream(static_cast<std::uint64_t>(i));
    Vector x = x_f;
    if (sigma > 0.0) {
      stream.seek(0);
      x += sigma * stream.normal_vector(sys.state_dim);
    }
    stream.seek(kWienerBlockOffset);
    auto& path = batch.states[i];
    path.row(0) = x.transpose();
    Vector dW(sys.control_dim);
    for (int j = 0; j < steps; ++j) {
      const Vector drift = -sys.drift_at(x) + eps2 * eval_frak_g(sys, x) +
                           sys.diffusion_at(x) * u_sched[j];
      stream.fill_normal(dW);
      dW *= sqrt_dt;
      x = euler_maruyama_step(sys, x, drift, dW, dt,
                              {static_cast<int>(i), j});
      path.row(j + 1) = x.transpose();
    }
  });
  return batch;
}

// Initial condition for closed-loop rollouts: deterministic when cov is
// empty, otherwise N(mean, cov).
struct InitialState {
  Vector mean;
  Matrix cov;

  static InitialState fixed(Vector x0) { return {std::move(x0), Matrix()}; }
  static InitialState gaussian(Vector mean, Matrix cov) {
    return {std::move(mean), std::move(cov)};
  }
  bool deterministic() const { return cov.size() == 0; }
};

using ControlLaw = std::function<Vector(double, const Vector&)>;

// Closed-loop rollout of dX = f(X) dt + g(X) (k(t, X) dt + eps dW) with the
// control held over each step and recorded at left endpoints.
inline TrajectoryBatch simulate_controlled(const ControlAffineSystem& sys,
                                           const TimeGrid& grid, int count,
                                           const InitialState& init,
                                           const ControlLaw& controller,
                                           const NoiseSource& noise) {
  sys.check_state(init.mean);
  if (count < 1) throw std::invalid_argument("simulate_controlled: count < 1");
  Matrix init_sqrt;
  if (!init.deterministic()) {
    if (init.cov.rows() != sys.state_dim || init.cov.cols() != sys.state_dim) {
      throw std::invalid_argument(
          "simulate_controlled: initial covariance has wrong shape");
    }
    Eigen::LLT<Matrix> llt(init.cov);
    if (llt.info() != Eigen::Success) {
      throw SingularityError(
          "simulate_controlled: initial covariance is not positive definite");
    }
    init_sqrt = llt.matrixL();
  }
  const int steps = grid.steps();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);

  TrajectoryBatch batch(grid, sys.state_dim, sys.control_dim);
  batch.states.assign(count,
                      Eigen::MatrixXd::Zero(steps + 1, sys.state_dim));
  batch.controls.assign(count,
                        Eigen::MatrixXd::Zero(steps, sys.control_dim));

  parallel_for(count, [&](std::int64_t i) {
    NoiseStream stream = noise.stream(static_cast<std::uint64_t>(i));
    Vector x = init.mean;
    if (!init.deterministic()) {
      stream.seek(0);
      x += init_sqrt * stream.normal_vector(sys.state_dim);
    }
    stream.seek(kWienerBlockOffset);
    auto& path = batch.states[i];
    auto& ctrl = batch.controls[i];
    path.row(0) = x.transpose();
    Vector dW(sys.control_dim);
    for (int j = 0; j < steps; ++j) {
      Vector uk;
      try {
        uk = controller(grid.time(j), x);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "controller failed on path " << i << " at t=" << grid.time(j)
            << ": " << e.what();
        throw NumericalError(msg.str());
      }
      if (uk.size() != sys.control_dim) {
        throw std::invalid_argument(
            "simulate_controlled: controller returned wrong dimension");
      }
      ctrl.row(j) = uk.transpose();
      const Vector drift = sys.drift_at(x) + sys.diffusion_at(x) * uk;
      stream.fill_normal(dW);
      dW *= sqrt_dt;
      x = euler_maruyama_step(sys, x, drift, dW, dt,
                              {static_cast<int>(i), j});
      path.row(j + 1) = x.transpose();
    }
  });
  return batch;
}

inline TrajectoryBatch simulate_controlled(const ControlAffineSystem& sys,
                                           const TimeGrid& grid, int count,
                                           const Vector& x0,
                                           const ControlLaw& controller,
                                           const NoiseSource& noise) {
  return simulate_controlled(sys, grid, count, InitialState::fixed(x0),
                             controller, noise);
}

}  // namespace revsteer

#endif  // REVSTEER_SDE_SIM_HPP_
