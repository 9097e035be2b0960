#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rewardforge/rng.hpp"

namespace rewardforge::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Parameter with gradient and Adam moments.
struct Tensor {
  MatrixXd value;
  MatrixXd grad;
  MatrixXd m;
  MatrixXd v;

  void init(int rows, int cols) {
    value = MatrixXd::Zero(rows, cols);
    grad = MatrixXd::Zero(rows, cols);
    m = MatrixXd::Zero(rows, cols);
    v = MatrixXd::Zero(rows, cols);
  }
};

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

// Fully connected net with ELU hidden activations and a linear head.
// Forward caches activations so backward can accumulate parameter grads.
class Mlp {
 public:
  Mlp() = default;

  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng) {
    dims_.push_back(input_dim);
    for (int h : hidden) dims_.push_back(h);
    dims_.push_back(output_dim);
    layers_.resize(dims_.size() - 1);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& [w, b] = layers_[l];
      w.init(dims_[l + 1], dims_[l]);
      b.init(dims_[l + 1], 1);
      const double scale = std::sqrt(2.0 / dims_[l]);
      for (int i = 0; i < w.value.rows(); ++i)
        for (int j = 0; j < w.value.cols(); ++j)
          w.value(i, j) = rng.normal(0.0, scale);
    }
  }

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  const std::vector<int>& dims() const { return dims_; }

  // x: [batch, in] -> [batch, out]; no caches.
  MatrixXd forward(const MatrixXd& x) const {
    MatrixXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      MatrixXd z = (h * layers_[l].first.value.transpose()).rowwise() +
                   layers_[l].second.value.col(0).transpose();
      if (l + 1 < layers_.size()) z = z.unaryExpr([](double v) { return elu(v); });
      h = std::move(z);
    }
    return h;
  }

  MatrixXd forward_train(const MatrixXd& x) {
    inputs_.clear();
    preacts_.clear();
    MatrixXd h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      inputs_.push_back(h);
      MatrixXd z = (h * layers_[l].first.value.transpose()).rowwise() +
                   layers_[l].second.value.col(0).transpose();
      preacts_.push_back(z);
      if (l + 1 < layers_.size()) z = z.unaryExpr([](double v) { return elu(v); });
      h = std::move(z);
    }
    return h;
  }

  // dout: [batch, out] gradient at the head; accumulates parameter grads and
  // returns the gradient at the input.
  MatrixXd backward(const MatrixXd& dout) {
    if (inputs_.empty()) throw std::logic_error("backward before forward_train");
    MatrixXd grad = dout;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
      if (l + 1 < static_cast<int>(layers_.size())) {
        grad = grad.cwiseProduct(
            preacts_[l].unaryExpr([](double v) { return elu_grad(v); }));
      }
      layers_[l].first.grad.noalias() += grad.transpose() * inputs_[l];
      layers_[l].second.grad.col(0).noalias() += grad.colwise().sum().transpose();
      if (l > 0) grad = grad * layers_[l].first.value;
    }
    return grad;
  }

  void for_each_param(const std::function<void(Tensor&)>& fn) {
    for (auto& [w, b] : layers_) {
      fn(w);
      fn(b);
    }
  }
  void for_each_param(const std::function<void(const Tensor&)>& fn) const {
    for (const auto& [w, b] : layers_) {
      fn(w);
      fn(b);
    }
  }

 private:
  std::vector<int> dims_;
  std::vector<std::pair<Tensor, Tensor>> layers_;  // (weight, bias)
  std::vector<MatrixXd> inputs_;
  std::vector<MatrixXd> preacts_;
};

// Adam over an externally supplied parameter walk.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(double lr, const std::function<void(const std::function<void(Tensor&)>&)>& walk) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    walk([&](Tensor& p) {
      p.m = beta1_ * p.m + (1.0 - beta1_) * p.grad;
      p.v = beta2_ * p.v.array().matrix() +
            (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
      const MatrixXd mhat = p.m / bc1;
      const MatrixXd vhat = p.v / bc2;
      p.value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps_);
      p.grad.setZero();
    });
  }

 private:
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
};

}  // namespace rewardforge::nn
