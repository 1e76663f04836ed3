#include "chain/model.hpp"

#include "chain/errors.hpp"

#include <cmath>

namespace chain {
namespace {

void check_shapes(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.dim())
    throw ConfigError("feature dimension " + std::to_string(x.cols()) +
                      " does not match model dimension " +
                      std::to_string(params.dim()));
}

void check_batch(const Matrix& x, std::span<const int> y) {
  if (x.rows() == 0) throw ConfigError("empty batch");
  if (static_cast<Index>(y.size()) != x.rows())
    throw ConfigError("label count does not match batch rows");
}

// Gradient of a mean loss given logit-space residuals r (B x C):
// (1/B) * r^T [x, 1].
Matrix residual_outer(const Matrix& r, const Matrix& x) {
  const Index d = x.cols();
  Matrix g(r.cols(), d + 1);
  g.leftCols(d).noalias() = r.transpose() * x;
  g.col(d) = r.colwise().sum().transpose();
  return g / static_cast<double>(x.rows());
}

// Row-wise log-softmax of logits (already validated finite).
Matrix log_softmax(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    out.row(i) = z.row(i).array() - lse;
  }
  return out;
}

}  // namespace

Matrix logits(const ModelParams& params, const Matrix& x) {
  check_shapes(params, x);
  const Index d = x.cols();
  Matrix z = x * params.weights.leftCols(d).transpose();
  z.rowwise() += params.weights.col(d).transpose();
  return z;
}

Matrix probs(const ModelParams& params, const Matrix& x) {
  if (!x.allFinite()) throw NumericError("non-finite input features");
  if (!params.weights.allFinite()) throw NumericError("non-finite weights");
  Matrix z = logits(params, x);
  if (!z.allFinite()) throw NumericError("non-finite logits");
  for (Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - m).exp();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

LossBreakdown loss(const ModelParams& params, const Matrix& x,
                   std::span<const int> y, double lambda) {
  check_batch(x, y);
  const Matrix z = logits(params, x);
  if (!z.allFinite()) throw NumericError("non-finite logits");
  const Matrix logp = log_softmax(z).cwiseMax(std::log(kProbFloor));
  const Index n = x.rows();
  const int c = params.num_classes();
  const double log_c = std::log(static_cast<double>(c));

  double ce = 0.0;
  double kl = 0.0;
  for (Index i = 0; i < n; ++i) {
    ce -= logp(i, y[static_cast<std::size_t>(i)]);
    // KL(U || p) = -ln C - (1/C) sum_k ln p_k
    kl += -log_c - logp.row(i).sum() / c;
  }
  LossBreakdown out;
  out.ce = ce / static_cast<double>(n);
  out.firth_kl = kl / static_cast<double>(n);
  out.total = out.ce + lambda * out.firth_kl;
  return out;
}

GradPair grad(const ModelParams& params, const Matrix& x,
              std::span<const int> y) {
  check_batch(x, y);
  const Matrix p = probs(params, x);
  const int c = params.num_classes();
  Matrix r_ce = p;
  for (Index i = 0; i < p.rows(); ++i) r_ce(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  const Matrix r_firth = p.array() - 1.0 / c;
  return {residual_outer(r_ce, x), residual_outer(r_firth, x)};
}

Matrix grad_ce(const ModelParams& params, const Matrix& x,
               std::span<const int> y) {
  check_batch(x, y);
  Matrix r = probs(params, x);
  for (Index i = 0; i < r.rows(); ++i) r(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  return residual_outer(r, x);
}

Matrix hvp(const ModelParams& params, const Matrix& x, std::span<const int> y,
           double lambda, const Matrix& v) {
  check_batch(x, y);
  if (v.rows() != params.weights.rows() || v.cols() != params.weights.cols())
    throw ConfigError("hvp direction has the wrong shape");
  const Matrix p = probs(params, x);
  const Index d = x.cols();
  // Tangent logits u_i = V [x_i, 1].
  Matrix u = x * v.leftCols(d).transpose();
  u.rowwise() += v.col(d).transpose();
  // (diag(p) - p p^T) u = p .* (u - <p, u>)
  const Vector pu = (p.array() * u.array()).rowwise().sum();
  Matrix a = p.array() * (u.colwise() - pu).array();
  a *= (1.0 + lambda);
  return residual_outer(a, x);
}

std::vector<int> argmax_rows(const Matrix& p) {
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < p.cols(); ++k)
      if (p(i, k) > p(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double predict_accuracy(const ModelParams& params, const Matrix& x,
                        std::span<const int> y) {
  check_batch(x, y);
  const std::vector<int> pred = argmax_rows(probs(params, x));
  Index hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace chain
