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

#ifndef REVSTEER_LINGAUSS_HPP_
#define REVSTEER_LINGAUSS_HPP_

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "revsteer/det_input.hpp"
#include "revsteer/dynamics.hpp"
#include "revsteer/errors.hpp"
#include "revsteer/time_grid.hpp"
#include "revsteer/trajectory.hpp"

namespace revsteer {

// Scaling-and-squaring Pade approximation (Eigen's implementation).
inline Matrix matrix_exponential(const Matrix& M) {
  if (M.rows() != M.cols()) {
    throw std::invalid_argument("matrix_exponential: matrix must be square");
  }
  if (!M.allFinite()) {
    throw std::invalid_argument("matrix_exponential: non-finite entries");
  }
  return M.exp();
}

// f(x) = Ax, g(x) = B. Construction verifies (A, B) controllability through
// the rank of [B, AB, ..., A^{n-1}B].
struct LinearSystem {
  Matrix A;
  Matrix B;
  double epsilon;
  int n;
  int m;

  LinearSystem(Matrix A_in, Matrix B_in, double eps)
      : A(std::move(A_in)),
        B(std::move(B_in)),
        epsilon(eps),
        n(static_cast<int>(A.rows())),
        m(static_cast<int>(B.cols())) {
    if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() < 1) {
      throw std::invalid_argument("LinearSystem: incompatible A/B shapes");
    }
    if (!(eps > 0.0)) {
      throw std::invalid_argument("LinearSystem: epsilon must be > 0");
    }
    Matrix ctrb(n, n * m);
    Matrix block = B;
    for (int k = 0; k < n; ++k) {
      ctrb.middleCols(k * m, m) = block;
      block = A * block;
    }
    Eigen::JacobiSVD<Matrix> svd(ctrb);
    svd.setThreshold(1e-10);
    if (svd.rank() < n) {
      throw std::invalid_argument("LinearSystem: (A, B) is not controllable");
    }
  }

  ControlAffineSystem to_control_affine() const {
    SystemParams params{{"A", A}, {"B", B}};
    return builtin_system("linear", params, epsilon);
  }
};

namespace detail {

// Composite Simpson of the matrix integrand e^{F tau} Q e^{F^T tau} over
// [0, t]. segments is rounded up to an even count >= 2.
inline Matrix gramian_simpson(const Matrix& F, const Matrix& Q, double t,
                              int segments) {
  const int n = static_cast<int>(F.rows());
  if (t <= 0.0) return Matrix::Zero(n, n);
  if (segments < 2) segments = 2;
  if (segments % 2 != 0) ++segments;
  const double h = t / segments;
  const Matrix step = matrix_exponential(F * h);
  Matrix E = Matrix::Identity(n, n);
  Matrix acc = Q;  // weight 1 at tau = 0
  for (int k = 1; k < segments; ++k) {
    E = step * E;
    acc += (k % 2 == 1 ? 4.0 : 2.0) * (E * Q * E.transpose());
  }
  E = step * E;
  acc += E * Q * E.transpose();
  acc *= h / 3.0;
  return 0.5 * (acc + acc.transpose());
}

// Composite Simpson of e^{F tau} over [0, t].
inline Matrix expm_integral_simpson(const Matrix& F, double t, int segments) {
  const int n = static_cast<int>(F.rows());
  if (t <= 0.0) return Matrix::Zero(n, n);
  if (segments < 2) segments = 2;
  if (segments % 2 != 0) ++segments;
  const double h = t / segments;
  const Matrix step = matrix_exponential(F * h);
  Matrix E = Matrix::Identity(n, n);
  Matrix acc = E;
  for (int k = 1; k < segments; ++k) {
    E = step * E;
    acc += (k % 2 == 1 ? 4.0 : 2.0) * E;
  }
  E = step * E;
  acc += E;
  return acc * (h / 3.0);
}

inline int segments_for(double t) {
  return std::max(8, static_cast<int>(std::ceil(200.0 * t)));
}

}  // namespace detail

// Forward controllability Gramian integral_0^T e^{As} B B^T e^{A^T s} ds.
inline Matrix controllability_gramian(const Matrix& A, const Matrix& B,
                                      double T) {
  return detail::gramian_simpson(A, B * B.transpose(), T,
                                 detail::segments_for(T));
}

// Mean / covariance tables of the auxiliary process on a grid:
//   m_t = e^{-At} x_f (+ the accumulated flow of B u when an input is set),
//   Sigma_t = eps^2 integral_0^t e^{-A(t-s)} BB^T e^{-A^T(t-s)} ds,
//   Q_t = Sigma_t + sigma^2 e^{-At} e^{-A^T t}.
struct GaussianMoments {
  TimeGrid grid;
  double sigma = 0.0;
  std::vector<Vector> mean;
  std::vector<Matrix> cov;      // Sigma_t
  std::vector<Matrix> reg_cov;  // Q_t

  explicit GaussianMoments(TimeGrid g) : grid(g) {}
};

// Tables are built by the Lyapunov stepping recurrence
// Sigma_{t+d} = e^{-Ad} Sigma_t e^{-A^T d} + Sigma_d, with the one-substep
// Gramian and input integral evaluated by composite Simpson.
inline GaussianMoments reverse_moments(const LinearSystem& lin,
                                       const TimeGrid& grid, const Vector& x_f,
                                       double sigma,
                                       const DeterministicInput* u = nullptr) {
  if (x_f.size() != lin.n) {
    throw std::invalid_argument("reverse_moments: x_f has wrong dimension");
  }
  if (sigma < 0.0) throw std::invalid_argument("reverse_moments: sigma < 0");
  if (u != nullptr &&
      (u->control_dim() != lin.m || !u->defined_on(grid))) {
    throw std::invalid_argument("reverse_moments: input does not match grid");
  }
  const int steps = grid.steps();
  const double dt = grid.dt();
  const double eps2 = lin.epsilon * lin.epsilon;

  const Matrix phi = matrix_exponential(-lin.A * dt);
  const int sub_segments =
      std::max(8, static_cast<int>(std::ceil(200.0 * dt)));
  const Matrix sigma_dt = detail::gramian_simpson(
      -lin.A, eps2 * lin.B * lin.B.transpose(), dt, sub_segments);
  const Matrix psi_dt = detail::expm_integral_simpson(-lin.A, dt, sub_segments);

  GaussianMoments mom(grid);
  mom.sigma = sigma;
  mom.mean.resize(steps + 1);
  mom.cov.resize(steps + 1);
  mom.reg_cov.resize(steps + 1);

  Vector m = x_f;
  Matrix S = Matrix::Zero(lin.n, lin.n);
  Matrix E = Matrix::Identity(lin.n, lin.n);  // e^{-At}
  for (int j = 0; j <= steps; ++j) {
    mom.mean[j] = m;
    mom.cov[j] = S;
    mom.reg_cov[j] = S + sigma * sigma * E * E.transpose();
    mom.reg_cov[j] = 0.5 * (mom.reg_cov[j] + mom.reg_cov[j].transpose());
    if (j < steps) {
      m = phi * m;
      if (u != nullptr) m += psi_dt * (lin.B * u->at_index(grid, j));
      S = phi * S * phi.transpose() + sigma_dt;
      S = 0.5 * (S + S.transpose());
      E = phi * E;
    }
  }
  return mom;
}

namespace detail {

struct SpdSolver {
  Eigen::LDLT<Matrix> ldlt;
  double condition = 0.0;
  bool positive = false;

  explicit SpdSolver(const Matrix& Q) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    positive = lo > 0.0;
    condition = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    ldlt.compute(Q);
  }
  bool usable() const { return positive && condition <= 1e14; }
};

inline void require_spd(const SpdSolver& solver, const std::string& label) {
  if (!solver.usable()) {
    std::ostringstream msg;
    msg << label << " is numerically singular (condition "
        << solver.condition << ")";
    throw SingularityError(msg.str());
  }
}

}  // namespace detail

// Feedback law k_hat(t, x) = -eps^2 B^T Q_{T-t}^{-1} (x - m_{T-t});
// reduces to the sigma = 0 law when the moments carry sigma = 0. t is
// snapped to the grid by zero-order hold.
inline Vector exact_control(const LinearSystem& lin,
                            const GaussianMoments& mom, double t,
                            const Vector& x) {
  if (x.size() != lin.n) {
    throw std::invalid_argument("exact_control: x has wrong dimension");
  }
  const double T = mom.grid.horizon();
  if (t < 0.0 || t >= T) {
    throw std::out_of_range("exact_control: t outside [0, T)");
  }
  const int rev = mom.grid.steps() - mom.grid.index_floor(t);
  detail::SpdSolver solver(mom.reg_cov[rev]);
  if (!solver.usable()) {
    std::ostringstream msg;
    msg << "exact_control: Q_{T-t} singular at t=" << t << " (condition "
        << solver.condition << ")";
    throw SingularityError(msg.str());
  }
  const Vector dev = x - mom.mean[rev];
  return -lin.epsilon * lin.epsilon *
         (lin.B.transpose() * solver.ldlt.solve(dev));
}

// Closed-form Brownian-bridge law for f = 0, g = I:
// U = (x_f - x_0)/T - eps^2 (x - (1 - t/T) x_0 - (t/T) x_f)
//     / (eps^2 (T - t) + sigma^2).
// At T = 1 this is the classical unit-horizon bridge law.
inline Vector brownian_bridge_control(const Vector& x0, const Vector& x_f,
                                      double eps, double sigma, double T,
                                      double t, const Vector& x) {
  if (x0.size() != x_f.size() || x.size() != x0.size()) {
    throw std::invalid_argument(
        "brownian_bridge_control: dimension mismatch");
  }
  if (t < 0.0 || t >= T) {
    throw std::out_of_range("brownian_bridge_control: t outside [0, T)");
  }
  const double denom = eps * eps * (T - t) + sigma * sigma;
  if (denom < 1e-14) {
    throw SingularityError("brownian_bridge_control: singular denominator");
  }
  const double r = t / T;
  const Vector nominal = (1.0 - r) * x0 + r * x_f;
  return (x_f - x0) / T - (eps * eps) * (x - nominal) / denom;
}

// Terminal-error prediction for the sigma-regularized law, from the proof
// quantities: M = sigma^2 I + eps^2 Gramian(T),
// mu = x_f + sigma^2 M^{-1} e^{TA} (x_0 - e^{-TA} x_f),
// P = sigma^2 (I - sigma^2 M^{-1}); total = |mu - x_f|^2 + tr(P).
struct TerminalErrorPrediction {
  double bias_sq = 0.0;
  double variance = 0.0;
  double total = 0.0;
  Vector mu;
  Matrix P;
};

inline TerminalErrorPrediction predicted_terminal_error(
    const LinearSystem& lin, const Vector& x0, const Vector& x_f, double sigma,
    double T) {
  if (x0.size() != lin.n || x_f.size() != lin.n) {
    throw std::invalid_argument(
        "predicted_terminal_error: state dimension mismatch");
  }
  if (sigma < 0.0 || !(T > 0.0)) {
    throw std::invalid_argument("predicted_terminal_error: bad sigma or T");
  }
  TerminalErrorPrediction out;
  if (sigma == 0.0) {
    out.mu = x_f;
    out.P = Matrix::Zero(lin.n, lin.n);
    return out;
  }
  const double s2 = sigma * sigma;
  const Matrix M = s2 * Matrix::Identity(lin.n, lin.n) +
                   lin.epsilon * lin.epsilon *
                       controllability_gramian(lin.A, lin.B, T);
  detail::SpdSolver solver(M);
  detail::require_spd(solver, "predicted_terminal_error: M");
  const Matrix eTA = matrix_exponential(lin.A * T);
  const Matrix e_minus_TA = matrix_exponential(-lin.A * T);
  const Vector gap = eTA * (x0 - e_minus_TA * x_f);
  out.mu = x_f + s2 * solver.ldlt.solve(gap);
  const Matrix M_inv = solver.ldlt.solve(Matrix::Identity(lin.n, lin.n));
  out.P = s2 * (Matrix::Identity(lin.n, lin.n) - s2 * M_inv);
  out.bias_sq = (out.mu - x_f).squaredNorm();
  out.variance = out.P.trace();
  out.total = out.bias_sq + out.variance;
  return out;
}

// Exact score of the Gaussian auxiliary density:
// s(t, x) = -BB^T Q_t^{-1} (x - m_t). Oracle for learned models.
inline Vector exact_score_linear(const LinearSystem& lin,
                                 const GaussianMoments& mom, double t,
                                 const Vector& x) {
  if (x.size() != lin.n) {
    throw std::invalid_argument("exact_score_linear: x has wrong dimension");
  }
  const int j = mom.grid.index_nearest(t);
  detail::SpdSolver solver(mom.reg_cov[j]);
  if (!solver.usable()) {
    std::ostringstream msg;
    msg << "exact_score_linear: Q_t singular at t=" << t;
    throw SingularityError(msg.str());
  }
  return -(lin.B * lin.B.transpose()) * solver.ldlt.solve(x - mom.mean[j]);
}

// CSV columns: t, m_1..m_n, vec(Q) row-major.
inline void write_moments_csv(const GaussianMoments& mom, std::ostream& os) {
  const int n = static_cast<int>(mom.mean.front().size());
  os << "t";
  for (int k = 1; k <= n; ++k) os << ",m_" << k;
  for (int r = 1; r <= n; ++r) {
    for (int c = 1; c <= n; ++c) os << ",q_" << r << "_" << c;
  }
  os << "\n";
  for (int j = 0; j <= mom.grid.steps(); ++j) {
    os << format_double(mom.grid.time(j));
    for (int k = 0; k < n; ++k) os << "," << format_double(mom.mean[j][k]);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        os << "," << format_double(mom.reg_cov[j](r, c));
      }
    }
    os << "\n";
  }
}

}  // namespace revsteer

#endif  // REVSTEER_LINGAUSS_HPP_
