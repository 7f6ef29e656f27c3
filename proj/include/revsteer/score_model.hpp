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

#ifndef REVSTEER_SCORE_MODEL_HPP_
#define REVSTEER_SCORE_MODEL_HPP_

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "revsteer/errors.hpp"
#include "revsteer/lingauss.hpp"
#include "revsteer/rng.hpp"
#include "revsteer/time_grid.hpp"

namespace revsteer {

// Trainable map (t, x) -> k(t, x) in R^m with direct access to the input
// Jacobian dk/dx and to parameter gradients of loss adjoints. Evaluation is
// const and thread-safe; only set_params mutates.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::string kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int output_dim() const = 0;

  virtual int param_count() const { return 0; }
  virtual const Eigen::VectorXd& params() const { return empty_params_; }
  virtual void set_params(const Eigen::VectorXd& p) {
    if (p.size() != 0) {
      throw std::invalid_argument(kind() + ": model has no parameters");
    }
  }

  // K is m x P; J is m x (P * n) with the block of point p in columns
  // [p*n, (p+1)*n).
  virtual void value_and_jacobian_batch(const std::vector<double>& t,
                                        const Eigen::MatrixXd& x,
                                        Eigen::MatrixXd& k,
                                        Eigen::MatrixXd& j) const = 0;

  // Accumulates d/dtheta of sum_p [a_p . k_p + <c_p, dk_p/dx>] into grad.
  virtual void accumulate_param_gradient(const std::vector<double>& t,
                                         const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& a,
                                         const Eigen::MatrixXd& c,
                                         Eigen::Ref<Eigen::VectorXd> grad)
      const {
    (void)t;
    (void)x;
    (void)a;
    (void)c;
    (void)grad;
  }

  virtual std::unique_ptr<ScoreModel> clone() const = 0;

  virtual Eigen::VectorXd value(double t, const Eigen::VectorXd& x) const {
    Eigen::MatrixXd k, j;
    value_and_jacobian_batch({t}, x, k, j);
    return k.col(0);
  }

  Eigen::MatrixXd input_jacobian(double t, const Eigen::VectorXd& x) const {
    Eigen::MatrixXd k, j;
    value_and_jacobian_batch({t}, x, k, j);
    return j;
  }

 protected:
  void check_batch(const std::vector<double>& t,
                   const Eigen::MatrixXd& x) const {
    if (x.rows() != state_dim() ||
        x.cols() != static_cast<Eigen::Index>(t.size())) {
      throw std::invalid_argument(kind() + ": batch shape mismatch");
    }
  }

 private:
  inline static const Eigen::VectorXd empty_params_{};
};

namespace detail {

inline double elu(double v) { return v > 0.0 ? v : std::expm1(v); }
inline double elu_d1(double v) { return v > 0.0 ? 1.0 : std::exp(v); }
inline double elu_d2(double v) { return v > 0.0 ? 0.0 : std::exp(v); }

}  // namespace detail

// Residual network: input layer (t/T, x) -> width, then `blocks` residual
// blocks of two width x width affine layers with an ELU between them, then
// an affine output layer to R^m. The input Jacobian is propagated
// analytically alongside the value, and the backward pass differentiates
// both the value path and the Jacobian path.
class MlpModel : public ScoreModel {
 public:
  MlpModel(int n, int m, double horizon, std::uint64_t seed, int width = 32,
           int blocks = 3)
      : n_(n), m_(m), horizon_(horizon), width_(width), blocks_(blocks) {
    if (n < 1 || m < 1 || width < 1 || blocks < 0 || !(horizon > 0.0)) {
      throw std::invalid_argument("MlpModel: bad architecture");
    }
    std::ptrdiff_t offset = 0;
    auto push_layer = [&](int rows, int cols) {
      layout_.push_back({offset, rows, cols});
      offset += static_cast<std::ptrdiff_t>(rows) * cols + rows;
    };
    push_layer(width_, n_ + 1);
    for (int b = 0; b < 2 * blocks_; ++b) push_layer(width_, width_);
    push_layer(m_, width_);
    params_.resize(offset);

    NoiseStream stream = NoiseSource(seed).stream(1);
    for (const auto& spec : layout_) {
      const double scale = std::sqrt(6.0 / (spec.rows + spec.cols));
      for (int i = 0; i < spec.rows * spec.cols; ++i) {
        params_[spec.offset + i] = scale * (2.0 * stream.uniform01() - 1.0);
      }
      params_.segment(spec.offset + spec.rows * spec.cols, spec.rows)
          .setZero();
    }
  }

  std::string kind() const override { return "mlp"; }
  int state_dim() const override { return n_; }
  int output_dim() const override { return m_; }
  double horizon() const { return horizon_; }
  int width() const { return width_; }
  int blocks() const { return blocks_; }

  int param_count() const override { return static_cast<int>(params_.size()); }
  const Eigen::VectorXd& params() const override { return params_; }
  void set_params(const Eigen::VectorXd& p) override {
    if (p.size() != params_.size()) {
      throw std::invalid_argument("MlpModel: parameter size mismatch");
    }
    params_ = p;
  }

  void value_and_jacobian_batch(const std::vector<double>& t,
                                const Eigen::MatrixXd& x, Eigen::MatrixXd& k,
                                Eigen::MatrixXd& j) const override {
    check_batch(t, x);
    Workspace ws;
    forward(t, x, ws);
    k = std::move(ws.out_k);
    j = std::move(ws.out_j);
  }

  void accumulate_param_gradient(
      const std::vector<double>& t, const Eigen::MatrixXd& x,
      const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
      Eigen::Ref<Eigen::VectorXd> grad) const override {
    check_batch(t, x);
    const int p_count = static_cast<int>(t.size());
    if (a.rows() != m_ || a.cols() != p_count || c.rows() != m_ ||
        c.cols() != static_cast<Eigen::Index>(p_count) * n_) {
      throw std::invalid_argument("MlpModel: adjoint shape mismatch");
    }
    if (grad.size() != params_.size()) {
      throw std::invalid_argument("MlpModel: gradient size mismatch");
    }
    Workspace ws;
    forward(t, x, ws);
    backward(ws, a, c, grad);
  }

  std::unique_ptr<ScoreModel> clone() const override {
    return std::make_unique<MlpModel>(*this);
  }

  // Jacobian-free forward pass for rollout-time evaluation.
  Eigen::VectorXd value(double t, const Eigen::VectorXd& x) const override {
    if (x.size() != n_) {
      throw std::invalid_argument("mlp: state dimension mismatch");
    }
    const double* base = params_.data();
    Eigen::VectorXd in(n_ + 1);
    in[0] = t / horizon_;
    in.tail(n_) = x;
    Eigen::VectorXd z =
        (wmap(base, 0) * in + bmap(base, 0)).unaryExpr(&detail::elu);
    Eigen::VectorXd buf(width_);
    for (int b = 0; b < blocks_; ++b) {
      buf.noalias() = wmap(base, 1 + 2 * b) * z;
      buf += bmap(base, 1 + 2 * b);
      buf = buf.unaryExpr(&detail::elu);
      z.noalias() += wmap(base, 2 + 2 * b) * buf;
      z += bmap(base, 2 + 2 * b);
    }
    return wmap(base, output_layer()) * z + bmap(base, output_layer());
  }

 private:
  using Mat = Eigen::MatrixXd;
  using MapW = Eigen::Map<const Mat>;
  using MapB = Eigen::Map<const Eigen::VectorXd>;

  struct LayerSpec {
    std::ptrdiff_t offset;
    int rows;
    int cols;
  };

  struct BlockCache {
    Mat z_in, jz_in;
    Mat u1, ju1;
    Mat v1, jv1;
    Mat z_out, jz_out;
  };

  struct Workspace {
    Mat xin;
    Mat u0, ju0;
    Mat z0, jz0;
    std::vector<BlockCache> blocks;
    Mat out_k, out_j;
  };

  MapW wmap(const double* base, int layer) const {
    const auto& s = layout_[layer];
    return MapW(base + s.offset, s.rows, s.cols);
  }
  MapB bmap(const double* base, int layer) const {
    const auto& s = layout_[layer];
    return MapB(base + s.offset + static_cast<std::ptrdiff_t>(s.rows) * s.cols,
                s.rows);
  }
  Eigen::Map<Mat> wgrad(double* base, int layer) const {
    const auto& s = layout_[layer];
    return Eigen::Map<Mat>(base + s.offset, s.rows, s.cols);
  }
  Eigen::Map<Eigen::VectorXd> bgrad(double* base, int layer) const {
    const auto& s = layout_[layer];
    return Eigen::Map<Eigen::VectorXd>(
        base + s.offset + static_cast<std::ptrdiff_t>(s.rows) * s.cols,
        s.rows);
  }
  int output_layer() const { return 1 + 2 * blocks_; }

  // j_out(:, p*n+l) = elu'(u(:, p)) .* j_in(:, p*n+l)
  void scale_jacobian(const Mat& u, const Mat& j_in, Mat& j_out) const {
    const int p_count = static_cast<int>(u.cols());
    j_out.resize(j_in.rows(), j_in.cols());
    for (int p = 0; p < p_count; ++p) {
      const Eigen::ArrayXd d = u.col(p).unaryExpr(&detail::elu_d1).array();
      j_out.middleCols(p * n_, n_) =
          (j_in.middleCols(p * n_, n_).array().colwise() * d).matrix();
    }
  }

  void forward(const std::vector<double>& t, const Eigen::MatrixXd& x,
               Workspace& ws) const {
    const int p_count = static_cast<int>(t.size());
    const double* base = params_.data();

    ws.xin.resize(n_ + 1, p_count);
    for (int p = 0; p < p_count; ++p) ws.xin(0, p) = t[p] / horizon_;
    ws.xin.bottomRows(n_) = x;

    const MapW w0 = wmap(base, 0);
    ws.u0.noalias() = w0 * ws.xin;
    ws.u0.colwise() += bmap(base, 0);
    // d(t/T, x)/dx = [0; I], so every point shares the pre-activation
    // Jacobian W0[:, 1:].
    ws.ju0.resize(width_, static_cast<Eigen::Index>(p_count) * n_);
    for (int p = 0; p < p_count; ++p) {
      ws.ju0.middleCols(p * n_, n_) = w0.rightCols(n_);
    }
    ws.z0 = ws.u0.unaryExpr(&detail::elu);
    scale_jacobian(ws.u0, ws.ju0, ws.jz0);

    ws.blocks.resize(blocks_);
    const Mat* z = &ws.z0;
    const Mat* jz = &ws.jz0;
    for (int b = 0; b < blocks_; ++b) {
      BlockCache& cache = ws.blocks[b];
      cache.z_in = *z;
      cache.jz_in = *jz;
      const MapW w1 = wmap(base, 1 + 2 * b);
      const MapW w2 = wmap(base, 2 + 2 * b);
      cache.u1.noalias() = w1 * cache.z_in;
      cache.u1.colwise() += bmap(base, 1 + 2 * b);
      cache.ju1.noalias() = w1 * cache.jz_in;
      cache.v1 = cache.u1.unaryExpr(&detail::elu);
      scale_jacobian(cache.u1, cache.ju1, cache.jv1);
      cache.z_out.noalias() = w2 * cache.v1;
      cache.z_out.colwise() += bmap(base, 2 + 2 * b);
      cache.z_out += cache.z_in;
      cache.jz_out.noalias() = w2 * cache.jv1;
      cache.jz_out += cache.jz_in;
      z = &cache.z_out;
      jz = &cache.jz_out;
    }

    const MapW wo = wmap(base, output_layer());
    ws.out_k.noalias() = wo * (*z);
    ws.out_k.colwise() += bmap(base, output_layer());
    ws.out_j.noalias() = wo * (*jz);
  }

  void backward(const Workspace& ws, const Eigen::MatrixXd& a,
                const Eigen::MatrixXd& c,
                Eigen::Ref<Eigen::VectorXd> grad) const {
    const int p_count = static_cast<int>(a.cols());
    const double* base = params_.data();
    Eigen::VectorXd gvec = Eigen::VectorXd::Zero(params_.size());
    double* gbase = gvec.data();

    const Mat& z_last = blocks_ > 0 ? ws.blocks.back().z_out : ws.z0;
    const Mat& jz_last = blocks_ > 0 ? ws.blocks.back().jz_out : ws.jz0;

    const int lo = output_layer();
    wgrad(gbase, lo).noalias() += a * z_last.transpose();
    wgrad(gbase, lo).noalias() += c * jz_last.transpose();
    bgrad(gbase, lo).noalias() += a.rowwise().sum();
    Mat zbar = wmap(base, lo).transpose() * a;
    Mat jbar = wmap(base, lo).transpose() * c;

    Mat ubar(width_, p_count);
    Mat jubar(width_, static_cast<Eigen::Index>(p_count) * n_);
    // Reverse of v = elu(u), jv = elu'(u) jn: the Jacobian path feeds
    // elu''(u) * <jvbar, jn> back into ubar.
    auto elu_backward = [&](const Mat& u, const Mat& ju, const Mat& vbar,
                            const Mat& jvbar) {
      for (int p = 0; p < p_count; ++p) {
        const Eigen::ArrayXd d1 = u.col(p).unaryExpr(&detail::elu_d1).array();
        const Eigen::ArrayXd d2 = u.col(p).unaryExpr(&detail::elu_d2).array();
        const auto jv = jvbar.middleCols(p * n_, n_).array();
        const auto jn = ju.middleCols(p * n_, n_).array();
        ubar.col(p) =
            (d1 * vbar.col(p).array() + d2 * (jv * jn).rowwise().sum())
                .matrix();
        jubar.middleCols(p * n_, n_) = (jv.colwise() * d1).matrix();
      }
    };

    for (int b = blocks_ - 1; b >= 0; --b) {
      const BlockCache& cache = ws.blocks[b];
      const MapW w1 = wmap(base, 1 + 2 * b);
      const MapW w2 = wmap(base, 2 + 2 * b);
      // Residual add: the pre-add branch sees (zbar, jbar) unchanged and the
      // skip path carries them forward to the block input.
      const Mat v1bar = w2.transpose() * zbar;
      const Mat jv1bar = w2.transpose() * jbar;
      wgrad(gbase, 2 + 2 * b).noalias() += zbar * cache.v1.transpose();
      wgrad(gbase, 2 + 2 * b).noalias() += jbar * cache.jv1.transpose();
      bgrad(gbase, 2 + 2 * b).noalias() += zbar.rowwise().sum();
      elu_backward(cache.u1, cache.ju1, v1bar, jv1bar);
      wgrad(gbase, 1 + 2 * b).noalias() += ubar * cache.z_in.transpose();
      wgrad(gbase, 1 + 2 * b).noalias() += jubar * cache.jz_in.transpose();
      bgrad(gbase, 1 + 2 * b).noalias() += ubar.rowwise().sum();
      zbar.noalias() += w1.transpose() * ubar;
      jbar.noalias() += w1.transpose() * jubar;
    }

    elu_backward(ws.u0, ws.ju0, zbar, jbar);
    wgrad(gbase, 0).noalias() += ubar * ws.xin.transpose();
    {
      auto gw0 = wgrad(gbase, 0);
      for (int p = 0; p < p_count; ++p) {
        gw0.rightCols(n_) += jubar.middleCols(p * n_, n_);
      }
    }
    bgrad(gbase, 0).noalias() += ubar.rowwise().sum();

    grad += gvec;
  }

  int n_;
  int m_;
  double horizon_;
  int width_;
  int blocks_;
  std::vector<LayerSpec> layout_;
  Eigen::VectorXd params_;
};

// Per-time-bin affine model k(t, x) = W_b x + c_b, one bin per grid node.
// The input Jacobian is exactly W_b, which makes the ISM objective quadratic
// in the parameters.
class FeatureModel : public ScoreModel {
 public:
  FeatureModel(int n, int m, const TimeGrid& grid)
      : n_(n), m_(m), grid_(grid), bins_(grid.steps() + 1) {
    params_ = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(bins_) * m_ * (n_ + 1));
  }

  std::string kind() const override { return "feature"; }
  int state_dim() const override { return n_; }
  int output_dim() const override { return m_; }
  const TimeGrid& grid() const { return grid_; }
  int bins() const { return bins_; }

  int param_count() const override { return static_cast<int>(params_.size()); }
  const Eigen::VectorXd& params() const override { return params_; }
  void set_params(const Eigen::VectorXd& p) override {
    if (p.size() != params_.size()) {
      throw std::invalid_argument("FeatureModel: parameter size mismatch");
    }
    params_ = p;
  }

  int bin_of(double t) const { return grid_.index_nearest(t); }

  Eigen::Map<const Eigen::MatrixXd> weight(int bin) const {
    return {params_.data() + bin_offset(bin), m_, n_};
  }
  Eigen::Map<const Eigen::VectorXd> offset(int bin) const {
    return {params_.data() + bin_offset(bin) + m_ * n_, m_};
  }
  void set_bin(int bin, const Eigen::MatrixXd& w, const Eigen::VectorXd& c) {
    Eigen::Map<Eigen::MatrixXd>(params_.data() + bin_offset(bin), m_, n_) = w;
    Eigen::Map<Eigen::VectorXd>(params_.data() + bin_offset(bin) + m_ * n_,
                                m_) = c;
  }

  void value_and_jacobian_batch(const std::vector<double>& t,
                                const Eigen::MatrixXd& x, Eigen::MatrixXd& k,
                                Eigen::MatrixXd& j) const override {
    check_batch(t, x);
    const int p_count = static_cast<int>(t.size());
    k.resize(m_, p_count);
    j.resize(m_, static_cast<Eigen::Index>(p_count) * n_);
    for (int p = 0; p < p_count; ++p) {
      const int b = bin_of(t[p]);
      const auto w = weight(b);
      k.col(p) = w * x.col(p) + offset(b);
      j.middleCols(p * n_, n_) = w;
    }
  }

  void accumulate_param_gradient(
      const std::vector<double>& t, const Eigen::MatrixXd& x,
      const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
      Eigen::Ref<Eigen::VectorXd> grad) const override {
    check_batch(t, x);
    const int p_count = static_cast<int>(t.size());
    if (grad.size() != params_.size()) {
      throw std::invalid_argument("FeatureModel: gradient size mismatch");
    }
    for (int p = 0; p < p_count; ++p) {
      const int b = bin_of(t[p]);
      Eigen::Map<Eigen::MatrixXd> gw(grad.data() + bin_offset(b), m_, n_);
      Eigen::Map<Eigen::VectorXd> gc(grad.data() + bin_offset(b) + m_ * n_,
                                     m_);
      gw.noalias() += a.col(p) * x.col(p).transpose();
      gw += c.middleCols(p * n_, n_);
      gc += a.col(p);
    }
  }

  std::unique_ptr<ScoreModel> clone() const override {
    return std::make_unique<FeatureModel>(*this);
  }

 private:
  std::ptrdiff_t bin_offset(int bin) const {
    return static_cast<std::ptrdiff_t>(bin) * m_ * (n_ + 1);
  }

  int n_;
  int m_;
  TimeGrid grid_;
  int bins_;
  Eigen::VectorXd params_;
};

// k identically zero; open-loop rollouts use it so the controller reduces to
// the reversed deterministic input.
class ZeroModel : public ScoreModel {
 public:
  ZeroModel(int n, int m) : n_(n), m_(m) {}
  std::string kind() const override { return "zero"; }
  int state_dim() const override { return n_; }
  int output_dim() const override { return m_; }

  void value_and_jacobian_batch(const std::vector<double>& t,
                                const Eigen::MatrixXd& x, Eigen::MatrixXd& k,
                                Eigen::MatrixXd& j) const override {
    check_batch(t, x);
    const int p_count = static_cast<int>(t.size());
    k = Eigen::MatrixXd::Zero(m_, p_count);
    j = Eigen::MatrixXd::Zero(m_, static_cast<Eigen::Index>(p_count) * n_);
  }

  std::unique_ptr<ScoreModel> clone() const override {
    return std::make_unique<ZeroModel>(*this);
  }

 private:
  int n_;
  int m_;
};

// Closed-form k*(t, x) = -B^T Q_t^{-1} (x - m_t) over precomputed moment
// tables, with gains prefactored per grid node.
class ExactLinearModel : public ScoreModel {
 public:
  ExactLinearModel(const LinearSystem& lin, GaussianMoments moments)
      : n_(lin.n), m_(lin.m), moments_(std::move(moments)) {
    const int steps = moments_.grid.steps();
    gain_.resize(steps + 1);
    usable_.assign(steps + 1, false);
    for (int jdx = 0; jdx <= steps; ++jdx) {
      detail::SpdSolver solver(moments_.reg_cov[jdx]);
      if (!solver.usable()) continue;
      gain_[jdx] = -lin.B.transpose() *
                   solver.ldlt.solve(Matrix::Identity(n_, n_));
      usable_[jdx] = true;
    }
  }

  std::string kind() const override { return "exact-linear"; }
  int state_dim() const override { return n_; }
  int output_dim() const override { return m_; }
  const GaussianMoments& moments() const { return moments_; }

  void value_and_jacobian_batch(const std::vector<double>& t,
                                const Eigen::MatrixXd& x, Eigen::MatrixXd& k,
                                Eigen::MatrixXd& j) const override {
    check_batch(t, x);
    const int p_count = static_cast<int>(t.size());
    k.resize(m_, p_count);
    j.resize(m_, static_cast<Eigen::Index>(p_count) * n_);
    for (int p = 0; p < p_count; ++p) {
      const int jdx = moments_.grid.index_nearest(t[p]);
      if (!usable_[jdx]) {
        throw SingularityError("exact-linear model: Q singular at t=" +
                               std::to_string(t[p]));
      }
      k.col(p) = gain_[jdx] * (x.col(p) - moments_.mean[jdx]);
      j.middleCols(p * n_, n_) = gain_[jdx];
    }
  }

  std::unique_ptr<ScoreModel> clone() const override {
    return std::make_unique<ExactLinearModel>(*this);
  }

 private:
  int n_;
  int m_;
  GaussianMoments moments_;
  std::vector<Matrix> gain_;
  std::vector<bool> usable_;
};

// Closed-form score of the f = 0, g = I bridge construction with constant
// input (x0 - xf)/T: k(t, x) = -(x - m_t) / (eps^2 t + sigma^2) with
// m_t = (1 - t/T) xf + (t/T) x0.
class BrownianBridgeModel : public ScoreModel {
 public:
  BrownianBridgeModel(Vector x0, Vector x_f, double eps, double sigma,
                      double horizon)
      : x0_(std::move(x0)),
        xf_(std::move(x_f)),
        eps_(eps),
        sigma_(sigma),
        horizon_(horizon),
        n_(static_cast<int>(x0_.size())) {
    if (xf_.size() != n_) {
      throw std::invalid_argument("BrownianBridgeModel: dimension mismatch");
    }
  }

  std::string kind() const override { return "bridge"; }
  int state_dim() const override { return n_; }
  int output_dim() const override { return n_; }

  void value_and_jacobian_batch(const std::vector<double>& t,
                                const Eigen::MatrixXd& x, Eigen::MatrixXd& k,
                                Eigen::MatrixXd& j) const override {
    check_batch(t, x);
    const int p_count = static_cast<int>(t.size());
    k.resize(n_, p_count);
    j.resize(n_, static_cast<Eigen::Index>(p_count) * n_);
    for (int p = 0; p < p_count; ++p) {
      const double denom = eps_ * eps_ * t[p] + sigma_ * sigma_;
      if (denom < 1e-14) {
        throw SingularityError("bridge model: singular denominator");
      }
      const double r = t[p] / horizon_;
      const Vector mean = (1.0 - r) * xf_ + r * x0_;
      k.col(p) = -(x.col(p) - mean) / denom;
      j.middleCols(p * n_, n_) = -Matrix::Identity(n_, n_) / denom;
    }
  }

  std::unique_ptr<ScoreModel> clone() const override {
    return std::make_unique<BrownianBridgeModel>(*this);
  }

 private:
  Vector x0_;
  Vector xf_;
  double eps_;
  double sigma_;
  double horizon_;
  int n_;
};

// ---------------------------------------------------------------------------
// Checkpoints: magic, header (kind, n, m, T, architecture constants), then
// the flat parameter vector as little-endian 64-bit floats. Only learned
// kinds are saved; closed-form models are rebuilt from their manifest.

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'R', 'V', 'S', 'T',
                                             'C', 'K', 'P', 'T'};

template <typename T>
void write_raw(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ConfigError("checkpoint: truncated file");
  return value;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto len = read_raw<std::uint32_t>(is);
  if (len > 64) throw ConfigError("checkpoint: implausible string length");
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw ConfigError("checkpoint: truncated file");
  return s;
}

}  // namespace detail

inline void save_checkpoint(const ScoreModel& model, double horizon,
                            std::ostream& os) {
  os.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::write_raw<std::uint32_t>(os, 1);
  detail::write_string(os, model.kind());
  detail::write_raw<std::uint32_t>(os,
                                   static_cast<std::uint32_t>(
                                       model.state_dim()));
  detail::write_raw<std::uint32_t>(os,
                                   static_cast<std::uint32_t>(
                                       model.output_dim()));
  detail::write_raw<double>(os, horizon);
  if (model.kind() == "mlp") {
    const auto& mlp = dynamic_cast<const MlpModel&>(model);
    detail::write_raw<std::uint32_t>(os, mlp.width());
    detail::write_raw<std::uint32_t>(os, mlp.blocks());
  } else if (model.kind() == "feature") {
    const auto& feat = dynamic_cast<const FeatureModel&>(model);
    detail::write_raw<std::uint32_t>(os, feat.bins());
    detail::write_raw<double>(os, feat.grid().dt());
  } else {
    throw ConfigError("checkpoint: kind '" + model.kind() +
                      "' is reconstructed from its manifest, not saved");
  }
  const auto& p = model.params();
  detail::write_raw<std::uint64_t>(os, static_cast<std::uint64_t>(p.size()));
  os.write(reinterpret_cast<const char*>(p.data()),
           static_cast<std::streamsize>(p.size() * sizeof(double)));
}

inline void save_checkpoint(const ScoreModel& model, double horizon,
                            const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  save_checkpoint(model, horizon, os);
}

inline std::unique_ptr<ScoreModel> load_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0) {
    throw ConfigError("checkpoint: bad magic");
  }
  const auto version = detail::read_raw<std::uint32_t>(is);
  if (version != 1) throw ConfigError("checkpoint: unsupported version");
  const std::string kind = detail::read_string(is);
  const int n = static_cast<int>(detail::read_raw<std::uint32_t>(is));
  const int m = static_cast<int>(detail::read_raw<std::uint32_t>(is));
  const double horizon = detail::read_raw<double>(is);
  std::unique_ptr<ScoreModel> model;
  if (kind == "mlp") {
    const int width = static_cast<int>(detail::read_raw<std::uint32_t>(is));
    const int blocks = static_cast<int>(detail::read_raw<std::uint32_t>(is));
    model = std::make_unique<MlpModel>(n, m, horizon, 0, width, blocks);
  } else if (kind == "feature") {
    const int bins = static_cast<int>(detail::read_raw<std::uint32_t>(is));
    const double dt = detail::read_raw<double>(is);
    TimeGrid grid(horizon, dt);
    if (grid.steps() + 1 != bins) {
      throw ConfigError("checkpoint: feature bins do not match grid");
    }
    model = std::make_unique<FeatureModel>(n, m, grid);
  } else {
    throw ConfigError("checkpoint: unknown kind '" + kind + "'");
  }
  const auto count = detail::read_raw<std::uint64_t>(is);
  if (count != static_cast<std::uint64_t>(model->param_count())) {
    throw ConfigError("checkpoint: parameter count mismatch");
  }
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  is.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ConfigError("checkpoint: truncated parameters");
  model->set_params(params);
  return model;
}

inline std::unique_ptr<ScoreModel> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return load_checkpoint(is);
}

}  // namespace revsteer

#endif  // REVSTEER_SCORE_MODEL_HPP_
