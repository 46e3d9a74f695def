#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fairprep/graph.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

using SparseMatrix = Eigen::SparseMatrix<double>;

namespace nn {

inline Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

/// Subgradient at 0 taken as 0.
inline Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0).cast<double>();
}

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

/// Numerically stable row-wise softmax.
inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd shifted = z.colwise() - z.rowwise().maxCoeff();
  Eigen::MatrixXd e = shifted.array().exp();
  return e.array().colwise() / e.rowwise().sum().array();
}

/// Glorot-uniform initialization: entries uniform in +-sqrt(6/(fan_in+fan_out)).
inline Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
  return w;
}

/// Adam over a fixed list of parameter matrices. Full-batch usage: one
/// step per epoch.
class Adam {
public:
  Adam(std::vector<Eigen::MatrixXd*> params, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto* p : params_) {
      m_.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      v_.emplace_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<Eigen::MatrixXd>& grads) {
    if (grads.size() != params_.size()) throw Error("Adam::step: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
      params_[i]->array() -=
          lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

private:
  std::vector<Eigen::MatrixXd*> params_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

} // namespace nn
} // namespace fairprep
