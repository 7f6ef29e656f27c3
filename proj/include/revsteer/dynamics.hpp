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

#ifndef REVSTEER_DYNAMICS_HPP_
#define REVSTEER_DYNAMICS_HPP_

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "revsteer/errors.hpp"

namespace revsteer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Jacobian of the diffusion matrix: entry [l](j, r) = d g(j,r) / d x_l.
using DiffusionJacobian = std::vector<Matrix>;

// Control-affine SDE  dX = f(X) dt + g(X) (U dt + eps dW).
// Immutable after construction; callables must be pure, so instances are
// safe to share across threads.
struct ControlAffineSystem {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  double epsilon = 0.0;
  bool constant_diffusion = false;
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> diffusion;
  // Optional analytic Jacobian; when absent a central difference with step
  // 1e-5 * max(1, |x_l|) is used.
  std::function<DiffusionJacobian(const Vector&)> diffusion_jacobian;

  void check_state(const Vector& x) const {
    if (x.size() != state_dim) {
      std::ostringstream msg;
      msg << "system '" << name << "': state has dimension " << x.size()
          << ", expected " << state_dim;
      throw std::invalid_argument(msg.str());
    }
  }

  Vector drift_at(const Vector& x) const {
    check_state(x);
    Vector f = drift(x);
    if (f.size() != state_dim) {
      throw std::invalid_argument("system '" + name +
                                  "': drift returned wrong dimension");
    }
    return f;
  }

  Matrix diffusion_at(const Vector& x) const {
    check_state(x);
    Matrix g = diffusion(x);
    if (g.rows() != state_dim || g.cols() != control_dim) {
      throw std::invalid_argument("system '" + name +
                                  "': diffusion returned wrong shape");
    }
    return g;
  }

  DiffusionJacobian diffusion_jacobian_at(const Vector& x) const {
    check_state(x);
    if (diffusion_jacobian) return diffusion_jacobian(x);
    DiffusionJacobian dg(state_dim, Matrix::Zero(state_dim, control_dim));
    if (constant_diffusion) return dg;
    Vector xp = x;
    for (int l = 0; l < state_dim; ++l) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[l]));
      xp[l] = x[l] + h;
      const Matrix gp = diffusion(xp);
      xp[l] = x[l] - h;
      const Matrix gm = diffusion(xp);
      xp[l] = x[l];
      dg[l] = (gp - gm) / (2.0 * h);
    }
    return dg;
  }

  // G(x) = g(x) g(x)^T.
  Matrix gram(const Vector& x) const {
    const Matrix g = diffusion_at(x);
    return g * g.transpose();
  }
};

// Divergence-type correction of the score decomposition:
// frak_g_i(x) = sum_{j,k} g(j,k) * d g(i,k) / d x_j.
inline Vector eval_frak_g(const ControlAffineSystem& sys, const Vector& x) {
  sys.check_state(x);
  if (sys.constant_diffusion) return Vector::Zero(sys.state_dim);
  const Matrix g = sys.diffusion_at(x);
  const DiffusionJacobian dg = sys.diffusion_jacobian_at(x);
  Vector out = Vector::Zero(sys.state_dim);
  for (int j = 0; j < sys.state_dim; ++j) {
    out.noalias() += dg[j] * g.row(j).transpose();
  }
  return out;
}

// Drift of the auxiliary (backward-simulated) process:
// h(x) = -f(x) + eps^2 * frak_g(x).
inline Vector reversed_drift(const ControlAffineSystem& sys, const Vector& x) {
  return -sys.drift_at(x) + sys.epsilon * sys.epsilon * eval_frak_g(sys, x);
}

// Parameter record for registry constructors; scalars are 1x1 matrices.
using SystemParams = std::map<std::string, Matrix>;

namespace detail {

using SystemFactory =
    std::function<ControlAffineSystem(const SystemParams&, double)>;

inline ControlAffineSystem make_brownian2d(const SystemParams&, double eps) {
  ControlAffineSystem sys;
  sys.name = "brownian2d";
  sys.state_dim = 2;
  sys.control_dim = 2;
  sys.epsilon = eps;
  sys.constant_diffusion = true;
  sys.drift = [](const Vector& x) { return Vector::Zero(x.size()); };
  sys.diffusion = [](const Vector&) { return Matrix::Identity(2, 2); };
  sys.diffusion_jacobian = [](const Vector&) {
    return DiffusionJacobian(2, Matrix::Zero(2, 2));
  };
  return sys;
}

inline ControlAffineSystem make_linear(const SystemParams& params,
                                       double eps) {
  const auto ia = params.find("A");
  const auto ib = params.find("B");
  if (ia == params.end() || ib == params.end()) {
    throw std::invalid_argument("system 'linear' requires parameters A and B");
  }
  const Matrix A = ia->second;
  const Matrix B = ib->second;
  if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() < 1) {
    throw std::invalid_argument(
        "system 'linear': A must be n x n and B must be n x m");
  }
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  ControlAffineSystem sys;
  sys.name = "linear";
  sys.state_dim = n;
  sys.control_dim = m;
  sys.epsilon = eps;
  sys.constant_diffusion = true;
  sys.drift = [A](const Vector& x) -> Vector { return A * x; };
  sys.diffusion = [B](const Vector&) { return B; };
  sys.diffusion_jacobian = [n, m](const Vector&) {
    return DiffusionJacobian(n, Matrix::Zero(n, m));
  };
  return sys;
}

inline ControlAffineSystem make_pendulum(const SystemParams&, double eps) {
  ControlAffineSystem sys;
  sys.name = "pendulum";
  sys.state_dim = 2;
  sys.control_dim = 1;
  sys.epsilon = eps;
  sys.constant_diffusion = true;
  sys.drift = [](const Vector& x) {
    Vector f(2);
    f[0] = x[1];
    f[1] = std::sin(x[0]) - 0.01 * x[1];
    return f;
  };
  sys.diffusion = [](const Vector&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  sys.diffusion_jacobian = [](const Vector&) {
    return DiffusionJacobian(2, Matrix::Zero(2, 1));
  };
  return sys;
}

inline const std::map<std::string, SystemFactory>& system_registry() {
  static const std::map<std::string, SystemFactory> registry = {
      {"brownian2d", make_brownian2d},
      {"linear", make_linear},
      {"pendulum", make_pendulum},
  };
  return registry;
}

}  // namespace detail

inline std::vector<std::string> registered_system_names() {
  std::vector<std::string> names;
  for (const auto& [name, factory] : detail::system_registry()) {
    names.push_back(name);
  }
  return names;
}

inline ControlAffineSystem builtin_system(const std::string& name,
                                          const SystemParams& params,
                                          double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  const auto& registry = detail::system_registry();
  const auto it = registry.find(name);
  if (it == registry.end()) {
    std::ostringstream msg;
    msg << "unknown system '" << name << "'; registered systems:";
    for (const auto& n : registered_system_names()) msg << " " << n;
    throw NotFoundError(msg.str());
  }
  return it->second(params, epsilon);
}

}  // namespace revsteer

#endif  // REVSTEER_DYNAMICS_HPP_
