#pragma once

#include "chain/data.hpp"

#include <span>
#include <vector>

namespace chain {

/// Softmax linear classifier weights, C x (d+1). The last column is the bias;
/// inputs are implicitly augmented with a constant 1.
struct ModelParams {
  Matrix weights;

  static ModelParams zeros(int num_classes, Index dim) {
    return {Matrix::Zero(num_classes, dim + 1)};
  }
  int num_classes() const { return static_cast<int>(weights.rows()); }
  Index dim() const { return weights.cols() - 1; }
  bool operator==(const ModelParams& o) const { return weights == o.weights; }
};

/// Mean cross-entropy, mean KL(uniform || p), and ce + lambda * firth_kl.
struct LossBreakdown {
  double ce = 0.0;
  double firth_kl = 0.0;
  double total = 0.0;
};

/// Gradients of the two loss terms, kept apart so callers can recombine them
/// for any lambda.
struct GradPair {
  Matrix g_ce;
  Matrix g_firth;

  Matrix combined(double lambda) const { return g_ce + lambda * g_firth; }
};

/// Floor applied to probabilities before taking logs.
inline constexpr double kProbFloor = 1e-12;

Matrix logits(const ModelParams& params, const Matrix& x);

/// Row-wise softmax with max subtraction. Throws NumericError on non-finite
/// input.
Matrix probs(const ModelParams& params, const Matrix& x);

LossBreakdown loss(const ModelParams& params, const Matrix& x,
                   std::span<const int> y, double lambda);

GradPair grad(const ModelParams& params, const Matrix& x,
              std::span<const int> y);

/// Gradient of the mean cross-entropy only.
Matrix grad_ce(const ModelParams& params, const Matrix& x,
               std::span<const int> y);

/// Exact Hessian-vector product of ce + lambda * firth_kl in direction v.
/// Both terms share the softmax curvature diag(p) - p p^T, so the per-example
/// logit-space block is (1 + lambda) times that matrix.
Matrix hvp(const ModelParams& params, const Matrix& x, std::span<const int> y,
           double lambda, const Matrix& v);

/// Fraction of rows whose argmax (ties to the lowest class) equals the label.
double predict_accuracy(const ModelParams& params, const Matrix& x,
                        std::span<const int> y);

/// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& p);

}  // namespace chain
