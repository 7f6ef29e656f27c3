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

#include "revsteer/dynamics.hpp"

#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "revsteer/rng.hpp"

using revsteer::builtin_system;
using revsteer::ControlAffineSystem;
using revsteer::DiffusionJacobian;
using revsteer::eval_frak_g;
using revsteer::Matrix;
using revsteer::reversed_drift;
using revsteer::Vector;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// n = 2, m = 1, g(x) = (x2, x1)^T with analytic Jacobian.
ControlAffineSystem swapped_state_system(double eps) {
  ControlAffineSystem sys;
  sys.name = "swap";
  sys.state_dim = 2;
  sys.control_dim = 1;
  sys.epsilon = eps;
  sys.drift = [](const Vector& x) { return Vector::Zero(x.size()); };
  sys.diffusion = [](const Vector& x) {
    Matrix g(2, 1);
    g << x[1], x[0];
    return g;
  };
  sys.diffusion_jacobian = [](const Vector&) {
    DiffusionJacobian dg(2, Matrix::Zero(2, 1));
    dg[0](1, 0) = 1.0;  // d g(2,1) / d x1
    dg[1](0, 0) = 1.0;  // d g(1,1) / d x2
    return dg;
  };
  return sys;
}

// Smooth state-dependent diffusion with analytic Jacobian, n = m = 2.
ControlAffineSystem smooth_test_system(double eps) {
  ControlAffineSystem sys;
  sys.name = "smooth";
  sys.state_dim = 2;
  sys.control_dim = 2;
  sys.epsilon = eps;
  sys.drift = [](const Vector& x) { return Vector::Zero(x.size()); };
  sys.diffusion = [](const Vector& x) {
    Matrix g(2, 2);
    g << 1.0 + 0.3 * std::sin(x[0]), 0.2 * x[1],  //
        0.1 * x[0] * x[1], 1.0 + 0.25 * std::cos(x[1]);
    return g;
  };
  sys.diffusion_jacobian = [](const Vector& x) {
    DiffusionJacobian dg(2, Matrix::Zero(2, 2));
    dg[0](0, 0) = 0.3 * std::cos(x[0]);
    dg[0](1, 0) = 0.1 * x[1];
    dg[1](0, 1) = 0.2;
    dg[1](1, 0) = 0.1 * x[0];
    dg[1](1, 1) = -0.25 * std::sin(x[1]);
    return dg;
  };
  return sys;
}

// frak_g by Jacobians recomputed with central differences of g.
Vector frak_g_fd_oracle(const ControlAffineSystem& sys, const Vector& x) {
  const Matrix g = sys.diffusion(x);
  Vector out = Vector::Zero(sys.state_dim);
  Vector xp = x;
  for (int j = 0; j < sys.state_dim; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const Matrix gp = sys.diffusion(xp);
    xp[j] = x[j] - h;
    const Matrix gm = sys.diffusion(xp);
    xp[j] = x[j];
    const Matrix dgj = (gp - gm) / (2.0 * h);
    out += dgj * g.row(j).transpose();
  }
  return out;
}

}  // namespace

TEST_CASE("frak_g vanishes for constant diffusion") {
  const auto pendulum = builtin_system("pendulum", {}, 0.3);
  revsteer::NoiseStream rng = revsteer::NoiseSource(11).stream(0);
  for (int i = 0; i < 20; ++i) {
    const Vector x = 3.0 * rng.normal_vector(2);
    CHECK(eval_frak_g(pendulum, x).norm() == 0.0);
  }
}

TEST_CASE("frak_g hand-evaluated case") {
  const auto sys = swapped_state_system(0.3);
  const Vector out = eval_frak_g(sys, vec2(1.0, 2.0));
  CHECK(out[0] == Catch::Approx(1.0).margin(1e-14));
  CHECK(out[1] == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("frak_g matches finite-difference oracle on random smooth g") {
  const auto sys = smooth_test_system(0.3);
  revsteer::NoiseStream rng = revsteer::NoiseSource(17).stream(0);
  for (int i = 0; i < 100; ++i) {
    const Vector x = 2.0 * rng.normal_vector(2);
    const Vector analytic = eval_frak_g(sys, x);
    const Vector fd = frak_g_fd_oracle(sys, x);
    CHECK((analytic - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("reversed drift examples") {
  const auto pendulum = builtin_system("pendulum", {}, 0.3);
  const Vector at_down = reversed_drift(pendulum, vec2(M_PI, 0.0));
  CHECK(at_down[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(at_down[1] == Catch::Approx(0.0).margin(1e-12));

  revsteer::SystemParams params;
  Matrix a(2, 2);
  a << 0.5, 1.0, -0.3, 0.2;
  params["A"] = a;
  params["B"] = Matrix::Identity(2, 2);
  const auto linear = builtin_system("linear", params, 0.3);
  const Vector x = vec2(1.0, -2.0);
  CHECK((reversed_drift(linear, x) + a * x).norm() == 0.0);

  const auto swap = swapped_state_system(0.3);
  const Vector h = reversed_drift(swap, vec2(1.0, 2.0));
  CHECK(h[0] == Catch::Approx(0.09).margin(1e-14));
  CHECK(h[1] == Catch::Approx(0.18).margin(1e-14));
}

TEST_CASE("reversed_drift identity h + f = eps^2 frak_g") {
  const auto sys = smooth_test_system(0.4);
  revsteer::NoiseStream rng = revsteer::NoiseSource(23).stream(0);
  for (int i = 0; i < 50; ++i) {
    const Vector x = rng.normal_vector(2);
    const Vector lhs = reversed_drift(sys, x) + sys.drift_at(x);
    const Vector rhs = 0.16 * eval_frak_g(sys, x);
    CHECK((lhs - rhs).norm() <= 1e-12);
  }
}

TEST_CASE("builtin registry") {
  const auto bm = builtin_system("brownian2d", {}, 0.3);
  CHECK(bm.state_dim == 2);
  CHECK(bm.control_dim == 2);
  CHECK(bm.epsilon == 0.3);
  CHECK(bm.drift_at(vec2(1.0, 1.0)).norm() == 0.0);
  CHECK(bm.diffusion_at(vec2(0.0, 0.0)).isApprox(Matrix::Identity(2, 2)));

  const auto pend = builtin_system("pendulum", {}, 0.3);
  const Vector f = pend.drift_at(vec2(1.0, 2.0));
  CHECK(f[0] == Catch::Approx(2.0));
  CHECK(f[1] == Catch::Approx(std::sin(1.0) - 0.02));
  Matrix g_expected(2, 1);
  g_expected << 0.0, 1.0;
  CHECK(pend.diffusion_at(vec2(0.0, 0.0)).isApprox(g_expected));

  revsteer::SystemParams params;
  params["A"] = Matrix::Zero(2, 2);
  params["B"] = Matrix::Identity(2, 2);
  const auto lin = builtin_system("linear", params, 0.3);
  revsteer::NoiseStream rng = revsteer::NoiseSource(3).stream(0);
  for (int i = 0; i < 5; ++i) {
    const Vector x = rng.normal_vector(2);
    CHECK((lin.drift_at(x) - bm.drift_at(x)).norm() == 0.0);
    CHECK((lin.diffusion_at(x) - bm.diffusion_at(x)).norm() == 0.0);
  }

  CHECK_THROWS_AS(builtin_system("nope", {}, 0.3), revsteer::NotFoundError);
  try {
    builtin_system("nope", {}, 0.3);
  } catch (const revsteer::NotFoundError& e) {
    const std::string what = e.what();
    CHECK(what.find("brownian2d") != std::string::npos);
    CHECK(what.find("linear") != std::string::npos);
    CHECK(what.find("pendulum") != std::string::npos);
  }
}

TEST_CASE("dimension mismatch raises invalid_argument") {
  const auto sys = builtin_system("pendulum", {}, 0.3);
  Vector bad(3);
  bad << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(eval_frak_g(sys, bad), std::invalid_argument);
  CHECK_THROWS_AS(reversed_drift(sys, bad), std::invalid_argument);
}

TEST_CASE("finite-difference fallback matches analytic jacobian") {
  const auto sys = smooth_test_system(0.3);
  ControlAffineSystem fd_sys = sys;
  fd_sys.diffusion_jacobian = nullptr;
  revsteer::NoiseStream rng = revsteer::NoiseSource(29).stream(0);
  for (int i = 0; i < 100; ++i) {
    const Vector x = 2.0 * rng.normal_vector(2);
    const auto analytic = sys.diffusion_jacobian_at(x);
    const auto fd = fd_sys.diffusion_jacobian_at(x);
    for (int l = 0; l < 2; ++l) {
      CHECK((analytic[l] - fd[l]).norm() <=
            1e-5 * std::max(1.0, analytic[l].norm()));
    }
  }
}
