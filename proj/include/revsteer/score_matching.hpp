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

#ifndef REVSTEER_SCORE_MATCHING_HPP_
#define REVSTEER_SCORE_MATCHING_HPP_

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "revsteer/dynamics.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/score_model.hpp"
#include "revsteer/threading.hpp"
#include "revsteer/trajectory.hpp"

namespace revsteer {

// A set of (t, x) samples; x stores one point per column.
struct PointBatch {
  std::vector<double> t;
  Matrix x;

  int size() const { return static_cast<int>(t.size()); }

  static PointBatch from_trajectories(const TrajectoryBatch& batch,
                                      const std::vector<int>& time_indices,
                                      const std::vector<int>& traj_indices) {
    PointBatch out;
    const int count =
        static_cast<int>(time_indices.size() * traj_indices.size());
    out.t.reserve(count);
    out.x.resize(batch.state_dim, count);
    int p = 0;
    for (const int j : time_indices) {
      const double tj = batch.grid.time(j);
      for (const int i : traj_indices) {
        out.t.push_back(tj);
        out.x.col(p++) = batch.states[i].row(j).transpose();
      }
    }
    return out;
  }
};

namespace detail {

// Per-point pieces of the restricted objective
//   J(k) = E[ 1/2 |g k + frak_g|^2 + <G, d(g k + frak_g)/dx> ].
// The derivative of frak_g is taken by central differences with step 1e-5
// (it is identically zero when g is constant).
struct IsmPointContext {
  Matrix g;        // n x m
  Matrix gram;     // G = g g^T
  Matrix c;        // g^T G, adjoint of the model Jacobian
  Vector v;        // v_r = sum_{j,l} G(j,l) dg[l](j,r)
  Vector frak;     // frak_g(x)
  double div_bias = 0.0;  // <G, d frak_g/dx>, model-independent
  DiffusionJacobian dg;
  bool state_dependent = false;
};

inline void fill_point_context(const ControlAffineSystem& sys, const Vector& x,
                               IsmPointContext& ctx) {
  ctx.g = sys.diffusion_at(x);
  ctx.gram.noalias() = ctx.g * ctx.g.transpose();
  ctx.c.noalias() = ctx.g.transpose() * ctx.gram;
  ctx.state_dependent = !sys.constant_diffusion;
  if (!ctx.state_dependent) {
    ctx.v = Vector::Zero(sys.control_dim);
    ctx.frak = Vector::Zero(sys.state_dim);
    ctx.div_bias = 0.0;
    return;
  }
  ctx.dg = sys.diffusion_jacobian_at(x);
  ctx.frak = eval_frak_g(sys, x);
  ctx.v = Vector::Zero(sys.control_dim);
  for (int l = 0; l < sys.state_dim; ++l) {
    ctx.v.noalias() += ctx.dg[l].transpose() * ctx.gram.col(l);
  }
  // <G, d frak_g / dx> by central differences.
  ctx.div_bias = 0.0;
  Vector xp = x;
  const double h = 1e-5;
  for (int l = 0; l < sys.state_dim; ++l) {
    xp[l] = x[l] + h;
    const Vector fp = eval_frak_g(sys, xp);
    xp[l] = x[l] - h;
    const Vector fm = eval_frak_g(sys, xp);
    xp[l] = x[l];
    ctx.div_bias += ctx.gram.col(l).dot((fp - fm) / (2.0 * h));
  }
}

// Loss contribution of one point given the model value k and Jacobian jk.
inline double ism_point_loss(const IsmPointContext& ctx, const Vector& k,
                             const Eigen::Ref<const Matrix>& jk) {
  const Vector psi = ctx.g * k + ctx.frak;
  // <G, g jk> = <g^T G, jk>
  double div = (ctx.c.array() * jk.array()).sum() + ctx.div_bias;
  if (ctx.state_dependent) {
    // <G, dgk> with dgk(j, l) = sum_r dg[l](j, r) k_r
    for (int l = 0; l < static_cast<int>(ctx.dg.size()); ++l) {
      div += ctx.gram.col(l).dot(ctx.dg[l] * k);
    }
  }
  return 0.5 * psi.squaredNorm() + div;
}

// Adjoint of the point loss with respect to k: g^T psi + v.
inline Vector ism_point_adjoint(const IsmPointContext& ctx, const Vector& k) {
  return ctx.g.transpose() * (ctx.g * k + ctx.frak) + ctx.v;
}

inline constexpr int kIsmChunk = 256;

}  // namespace detail

// Divergence term of the objective at one point:
// sum_{j,l} G(j,l) d_l (g k + frak_g)_j.
inline double model_divergence(const ControlAffineSystem& sys,
                               const ScoreModel& model, double t,
                               const Vector& x) {
  sys.check_state(x);
  detail::IsmPointContext ctx;
  detail::fill_point_context(sys, x, ctx);
  Eigen::MatrixXd k, j;
  model.value_and_jacobian_batch({t}, x, k, j);
  double div = (ctx.c.array() * j.array()).sum() + ctx.div_bias;
  if (ctx.state_dependent) {
    for (int l = 0; l < sys.state_dim; ++l) {
      div += ctx.gram.col(l).dot(ctx.dg[l] * k.col(0));
    }
  }
  return div;
}

// Empirical restricted objective over a point batch. Chunks are processed
// independently and reduced in a fixed order, so the result does not depend
// on the worker count.
inline double ism_objective(const ControlAffineSystem& sys,
                            const ScoreModel& model, const PointBatch& batch) {
  const int count = batch.size();
  if (count == 0) throw std::invalid_argument("ism_objective: empty batch");
  const int n = sys.state_dim;
  const int chunks = (count + detail::kIsmChunk - 1) / detail::kIsmChunk;
  std::vector<double> partial(chunks, 0.0);

  detail::IsmPointContext shared_ctx;
  if (sys.constant_diffusion) {
    detail::fill_point_context(sys, batch.x.col(0), shared_ctx);
  }

  parallel_for(chunks, [&](std::int64_t chunk) {
    const int begin = static_cast<int>(chunk) * detail::kIsmChunk;
    const int end = std::min(count, begin + detail::kIsmChunk);
    const int len = end - begin;
    std::vector<double> t(batch.t.begin() + begin, batch.t.begin() + end);
    const Matrix x = batch.x.middleCols(begin, len);
    Eigen::MatrixXd k, j;
    model.value_and_jacobian_batch(t, x, k, j);
    double acc = 0.0;
    detail::IsmPointContext local_ctx;
    for (int p = 0; p < len; ++p) {
      const detail::IsmPointContext* ctx = &shared_ctx;
      if (!sys.constant_diffusion) {
        detail::fill_point_context(sys, x.col(p), local_ctx);
        ctx = &local_ctx;
      }
      acc += detail::ism_point_loss(*ctx, k.col(p), j.middleCols(p * n, n));
    }
    partial[chunk] = acc;
  });

  double total = 0.0;
  for (const double v : partial) total += v;
  const double loss = total / count;
  if (!std::isfinite(loss)) {
    throw NumericalError("ism_objective: non-finite loss");
  }
  return loss;
}

// Batch-mean gradient of the objective with respect to the model parameters,
// backpropagated through both the value and the input-Jacobian paths.
// Returns the loss as a byproduct.
inline double loss_and_gradient(const ControlAffineSystem& sys,
                                const ScoreModel& model,
                                const PointBatch& batch, Vector& grad) {
  const int count = batch.size();
  if (count == 0) throw std::invalid_argument("loss_gradient: empty batch");
  const int n = sys.state_dim;
  const int m = sys.control_dim;
  const int chunks = (count + detail::kIsmChunk - 1) / detail::kIsmChunk;
  std::vector<double> partial_loss(chunks, 0.0);
  std::vector<Vector> partial_grad(chunks);

  detail::IsmPointContext shared_ctx;
  if (sys.constant_diffusion) {
    detail::fill_point_context(sys, batch.x.col(0), shared_ctx);
  }

  parallel_for(chunks, [&](std::int64_t chunk) {
    const int begin = static_cast<int>(chunk) * detail::kIsmChunk;
    const int end = std::min(count, begin + detail::kIsmChunk);
    const int len = end - begin;
    std::vector<double> t(batch.t.begin() + begin, batch.t.begin() + end);
    const Matrix x = batch.x.middleCols(begin, len);
    Eigen::MatrixXd k, j;
    model.value_and_jacobian_batch(t, x, k, j);

    Matrix a(m, len);
    Matrix c(m, static_cast<Eigen::Index>(len) * n);
    double acc = 0.0;
    detail::IsmPointContext local_ctx;
    for (int p = 0; p < len; ++p) {
      const detail::IsmPointContext* ctx = &shared_ctx;
      if (!sys.constant_diffusion) {
        detail::fill_point_context(sys, x.col(p), local_ctx);
        ctx = &local_ctx;
      }
      acc += detail::ism_point_loss(*ctx, k.col(p), j.middleCols(p * n, n));
      a.col(p) = detail::ism_point_adjoint(*ctx, k.col(p));
      c.middleCols(p * n, n) = ctx->c;
    }
    partial_loss[chunk] = acc;
    partial_grad[chunk] = Vector::Zero(model.param_count());
    model.accumulate_param_gradient(t, x, a, c, partial_grad[chunk]);
  });

  grad = Vector::Zero(model.param_count());
  double total = 0.0;
  for (int chunk = 0; chunk < chunks; ++chunk) {
    total += partial_loss[chunk];
    grad += partial_grad[chunk];
  }
  grad /= count;
  const double loss = total / count;
  if (!std::isfinite(loss) || !grad.allFinite()) {
    throw NumericalError("loss_gradient: non-finite loss or gradient");
  }
  return loss;
}

inline Vector loss_gradient(const ControlAffineSystem& sys,
                            const ScoreModel& model, const PointBatch& batch) {
  Vector grad;
  loss_and_gradient(sys, model, batch, grad);
  return grad;
}

}  // namespace revsteer

#endif  // REVSTEER_SCORE_MATCHING_HPP_
