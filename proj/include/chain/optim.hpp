#pragma once

#include "chain/data.hpp"

#include <cmath>
#include <cstdint>

namespace chain {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam on a single scalar.
class ScalarAdam {
 public:
  explicit ScalarAdam(AdamParams p) : p_(p) {}

  double step(double x, double g) {
    ++t_;
    m_ = p_.beta1 * m_ + (1 - p_.beta1) * g;
    v_ = p_.beta2 * v_ + (1 - p_.beta2) * g * g;
    const double mhat = m_ / (1 - std::pow(p_.beta1, static_cast<double>(t_)));
    const double vhat = v_ / (1 - std::pow(p_.beta2, static_cast<double>(t_)));
    return x - p_.lr * mhat / (std::sqrt(vhat) + p_.eps);
  }

 private:
  AdamParams p_;
  double m_ = 0.0;
  double v_ = 0.0;
  std::int64_t t_ = 0;
};

/// Adam on a dense matrix, moments lazily shaped on first use.
class MatrixAdam {
 public:
  explicit MatrixAdam(AdamParams p) : p_(p) {}

  void step(Matrix& x, const Matrix& g) {
    if (m_.size() == 0) {
      m_ = Matrix::Zero(g.rows(), g.cols());
      v_ = Matrix::Zero(g.rows(), g.cols());
    }
    ++t_;
    m_ = p_.beta1 * m_ + (1 - p_.beta1) * g;
    v_ = p_.beta2 * v_ + (1 - p_.beta2) * g.cwiseProduct(g);
    const double c1 = 1 - std::pow(p_.beta1, static_cast<double>(t_));
    const double c2 = 1 - std::pow(p_.beta2, static_cast<double>(t_));
    x.array() -= p_.lr * (m_.array() / c1) /
                 ((v_.array() / c2).sqrt() + p_.eps);
  }

 private:
  AdamParams p_;
  Matrix m_;
  Matrix v_;
  std::int64_t t_ = 0;
};

/// Heavy-ball SGD: buf = mu * buf + g; x -= lr * buf.
class MatrixMomentumSgd {
 public:
  MatrixMomentumSgd(double lr, double momentum) : lr_(lr), mu_(momentum) {}

  void step(Matrix& x, const Matrix& g) {
    if (buf_.size() == 0) buf_ = Matrix::Zero(g.rows(), g.cols());
    buf_ = mu_ * buf_ + g;
    x -= lr_ * buf_;
  }

 private:
  double lr_;
  double mu_;
  Matrix buf_;
};

}  // namespace chain
