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

#ifndef REVSTEER_SYNTHESIS_HPP_
#define REVSTEER_SYNTHESIS_HPP_

#include <memory>
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
#include "revsteer/rng.hpp"
#include "revsteer/score_model.hpp"
#include "revsteer/sde_sim.hpp"
#include "revsteer/time_grid.hpp"
#include "revsteer/train.hpp"

namespace revsteer {

// Deployable feedback law U_t = eps^2 k*(T - t, x) + u_tilde_t with
// u_tilde_t = -u_{T-t}. Time is snapped to the grid by zero-order hold, and
// the law is never evaluated at t = T (it is singular there for sigma = 0);
// rollouts hold the control from T - dt.
struct SynthesizedController {
  std::shared_ptr<const ScoreModel> model;
  ControlAffineSystem system;
  TimeGrid grid;
  DeterministicInput det_input;
  double epsilon = 0.0;

  Vector eval(double t, const Vector& x) const {
    if (t < 0.0 || t >= grid.horizon()) {
      throw std::out_of_range("controller: t outside [0, T)");
    }
    const int j = std::min(grid.index_floor(t), grid.steps() - 1);
    const int rev = grid.steps() - j;
    Vector u = epsilon * epsilon * model->value(grid.time(rev), x);
    u -= det_input.at_index(grid, rev);
    if (!u.allFinite()) {
      std::ostringstream msg;
      msg << "controller: non-finite control at t=" << t;
      throw NumericalError(msg.str());
    }
    return u;
  }

  ControlLaw law() const {
    return [ctrl = *this](double t, const Vector& x) {
      return ctrl.eval(t, x);
    };
  }
};

inline Vector controller_eval(const SynthesizedController& ctrl, double t,
                              const Vector& x) {
  return ctrl.eval(t, x);
}

struct SynthesisResult {
  SynthesizedController controller;
  TrajectoryBatch z_batch;
  std::vector<double> loss_history;
};

// End-to-end synthesis: simulate the auxiliary process from the target,
// train the score model on it, assemble the controller.
inline SynthesisResult synthesize(const ControlAffineSystem& sys,
                                  const TimeGrid& grid, const Vector& x_f,
                                  double sigma, const DeterministicInput& u,
                                  int trajectory_count,
                                  const TrainConfig& train_cfg,
                                  std::uint64_t seed) {
  train_cfg.validate(trajectory_count, grid);

  TrajectoryBatch z_batch = [&] {
    try {
      return simulate_auxiliary(sys, grid, trajectory_count, x_f, sigma, u,
                                NoiseSource(seed));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("synthesize[simulate]: ") + e.what());
    }
  }();

  std::shared_ptr<ScoreModel> model;
  if (train_cfg.model_kind == ModelKind::kMlp) {
    model = std::make_shared<MlpModel>(sys.state_dim, sys.control_dim,
                                       grid.horizon(), train_cfg.seed);
  } else {
    model = std::make_shared<FeatureModel>(sys.state_dim, sys.control_dim,
                                           grid);
  }

  TrainResult trained = [&] {
    try {
      return train(sys, *model, z_batch, train_cfg);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("synthesize[train]: ") + e.what());
    }
  }();

  SynthesizedController ctrl{model, sys, grid, u, sys.epsilon};
  return {std::move(ctrl), std::move(z_batch),
          std::move(trained.loss_history)};
}

// Analytic controller for linear systems, bypassing training. The
// deterministic input enters through the auxiliary mean, so the assembled
// law equals the regularized closed form shifted by the input flow.
inline SynthesizedController make_exact_linear_controller(
    const LinearSystem& lin, const TimeGrid& grid, const Vector& x_f,
    double sigma, const DeterministicInput& u) {
  GaussianMoments moments = reverse_moments(lin, grid, x_f, sigma, &u);
  auto model = std::make_shared<ExactLinearModel>(lin, std::move(moments));
  return SynthesizedController{model, lin.to_control_affine(), grid, u,
                               lin.epsilon};
}

// Open-loop baseline: no feedback, only the reversed deterministic input.
inline SynthesizedController make_open_loop_controller(
    const ControlAffineSystem& sys, const TimeGrid& grid,
    const DeterministicInput& u) {
  auto model = std::make_shared<ZeroModel>(sys.state_dim, sys.control_dim);
  return SynthesizedController{model, sys, grid, u, sys.epsilon};
}

// Closed-form bridge law for f = 0, g = I with the straight-line input
// u = (x0 - xf)/T.
inline SynthesizedController make_analytic_bridge_controller(
    const ControlAffineSystem& sys, const TimeGrid& grid, const Vector& x0,
    const Vector& x_f, double sigma) {
  if (sys.state_dim != sys.control_dim) {
    throw std::invalid_argument(
        "analytic bridge controller requires g = I (square system)");
  }
  auto model = std::make_shared<BrownianBridgeModel>(
      x0, x_f, sys.epsilon, sigma, grid.horizon());
  const DeterministicInput u =
      DeterministicInput::constant((x0 - x_f) / grid.horizon());
  return SynthesizedController{model, sys, grid, u, sys.epsilon};
}

}  // namespace revsteer

#endif  // REVSTEER_SYNTHESIS_HPP_
