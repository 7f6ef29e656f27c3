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

#ifndef REVSTEER_TRAIN_HPP_
#define REVSTEER_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revsteer/dynamics.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/rng.hpp"
#include "revsteer/score_matching.hpp"
#include "revsteer/score_model.hpp"
#include "revsteer/trajectory.hpp"

namespace revsteer {

enum class ModelKind { kMlp, kFeature };

inline std::string to_string(ModelKind kind) {
  return kind == ModelKind::kMlp ? "mlp" : "feature";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "mlp") return ModelKind::kMlp;
  if (s == "feature") return ModelKind::kFeature;
  throw ConfigError("unknown model kind '" + s + "'");
}

struct TrainConfig {
  int iterations = 10000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double stabilizer = 1e-8;
  // 0 selects the default floor(T / (10 dt)) + 1 sampled time instants.
  int k1_override = 0;
  int k2 = 32;
  std::uint64_t seed = 0;
  ModelKind model_kind = ModelKind::kMlp;

  int k1_for(const TimeGrid& grid) const {
    if (k1_override > 0) return k1_override;
    return static_cast<int>(
               std::floor(grid.horizon() / (10.0 * grid.dt()))) +
           1;
  }

  void validate(int trajectory_count, const TimeGrid& grid) const {
    if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations < 1");
    if (!(learning_rate > 0.0)) {
      throw std::invalid_argument("TrainConfig: learning rate must be > 0");
    }
    if (k1_for(grid) < 1) throw std::invalid_argument("TrainConfig: K1 < 1");
    if (k2 < 1) throw std::invalid_argument("TrainConfig: K2 < 1");
    if (k2 > trajectory_count) {
      throw std::invalid_argument("TrainConfig: K2 exceeds trajectory count");
    }
  }
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  explicit AdamState(Eigen::Index size)
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}
};

// Standard bias-corrected update; mutates params and state.
inline void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
                      const Eigen::VectorXd& grad, const TrainConfig& cfg) {
  if (params.size() != state.m.size() || grad.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v.array() =
      cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square();
  const double mc = 1.0 - std::pow(cfg.beta1, state.step);
  const double vc = 1.0 - std::pow(cfg.beta2, state.step);
  params.array() -= cfg.learning_rate * (state.m.array() / mc) /
                    ((state.v.array() / vc).sqrt() + cfg.stabilizer);
}

struct TrainResult {
  std::vector<double> loss_history;
  // How often each grid node was drawn as a training time.
  std::vector<long> time_draw_counts;
};

// Minibatch training of the restricted objective. Each iteration samples K1
// time instants uniformly from {dt, ..., T} (t = 0 is excluded: with
// sigma = 0 the density there is a point mass and the score is undefined)
// and K2 distinct trajectories, then applies one Adam update on the
// K1 * K2-point batch.
inline TrainResult train(const ControlAffineSystem& sys, ScoreModel& model,
                         const TrajectoryBatch& batch,
                         const TrainConfig& cfg) {
  cfg.validate(batch.count(), batch.grid);
  if (model.state_dim() != sys.state_dim ||
      model.output_dim() != sys.control_dim) {
    throw std::invalid_argument("train: model does not match system");
  }
  const int steps = batch.grid.steps();
  const int k1 = cfg.k1_for(batch.grid);
  const int n_traj = batch.count();

  NoiseStream sampler = NoiseSource(cfg.seed).stream(0);
  AdamState adam(model.param_count());
  Eigen::VectorXd params = model.params();
  Eigen::VectorXd grad;

  TrainResult result;
  result.loss_history.reserve(cfg.iterations);
  result.time_draw_counts.assign(steps + 1, 0);

  std::vector<int> time_indices(k1);
  std::vector<int> traj_pool(n_traj);
  std::iota(traj_pool.begin(), traj_pool.end(), 0);
  std::vector<int> traj_indices(cfg.k2);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int a = 0; a < k1; ++a) {
      time_indices[a] =
          1 + static_cast<int>(sampler.uniform_below(
                  static_cast<std::uint64_t>(steps)));
      ++result.time_draw_counts[time_indices[a]];
    }
    // Partial Fisher-Yates draw of K2 distinct trajectories.
    for (int a = 0; a < cfg.k2; ++a) {
      const int pick =
          a + static_cast<int>(sampler.uniform_below(
                  static_cast<std::uint64_t>(n_traj - a)));
      std::swap(traj_pool[a], traj_pool[pick]);
      traj_indices[a] = traj_pool[a];
    }

    const PointBatch points =
        PointBatch::from_trajectories(batch, time_indices, traj_indices);
    double loss;
    try {
      loss = loss_and_gradient(sys, model, points, grad);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << "train: diverged at iteration " << iter << ": " << e.what();
      throw NumericalError(msg.str());
    }
    adam_step(adam, params, grad, cfg);
    model.set_params(params);
    result.loss_history.push_back(loss);
  }
  return result;
}

// Exact per-bin minimizer of the empirical objective for the affine model
// with constant diffusion. With S = B^T B, stationarity gives
// [W c] * Mtilde = -[B^T 0] with Mtilde the second-moment matrix of (x, 1),
// independent of S; bins with rank-deficient Mtilde fall back to a ridge of
// 1e-8 I and are reported.
struct FeatureFitResult {
  FeatureModel model;
  std::vector<int> ridged_bins;
};

inline FeatureFitResult fit_feature_model_closed_form(
    const ControlAffineSystem& sys, const TrajectoryBatch& batch) {
  if (!sys.constant_diffusion) {
    throw std::invalid_argument(
        "fit_feature_model_closed_form: requires constant diffusion");
  }
  const int n = sys.state_dim;
  const int m = sys.control_dim;
  if (batch.count() < n + 1) {
    throw std::invalid_argument(
        "fit_feature_model_closed_form: needs at least n + 1 samples per bin");
  }
  const Matrix B = sys.diffusion_at(batch.initial_state(0));

  FeatureFitResult out{FeatureModel(n, m, batch.grid), {}};
  Matrix rhs = Matrix::Zero(n + 1, m);
  rhs.topRows(n) = -B;

  for (int j = 0; j <= batch.grid.steps(); ++j) {
    const Matrix x = batch.states_at(j);
    const int count = static_cast<int>(x.cols());
    Matrix mt(n + 1, n + 1);
    mt.topLeftCorner(n, n) = (x * x.transpose()) / count;
    mt.topRightCorner(n, 1) = x.rowwise().mean();
    mt.bottomLeftCorner(1, n) = mt.topRightCorner(n, 1).transpose();
    mt(n, n) = 1.0;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(mt);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
      mt += 1e-8 * Matrix::Identity(n + 1, n + 1);
      out.ridged_bins.push_back(j);
    }
    // [W c] Mt = -[B^T 0]  =>  Mt [W c]^T = rhs (Mt symmetric).
    const Matrix at = mt.ldlt().solve(rhs);
    out.model.set_bin(j, at.topRows(n).transpose(),
                      at.bottomRows(1).transpose());
  }
  return out;
}

}  // namespace revsteer

#endif  // REVSTEER_TRAIN_HPP_
