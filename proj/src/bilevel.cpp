#include "chain/bilevel.hpp"

#include "chain/errors.hpp"
#include "chain/optim.hpp"
#include "chain/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace chain {
namespace {

[[noreturn]] void numeric_abort(const char* what, double lambda, int step) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite " << what << " in inner unroll (lambda=" << lambda
     << ", step=" << step << ")";
  throw NumericError(os.str());
}

}  // namespace

void BilevelConfig::validate() const {
  if (t1 < 0 || t2 < 1) throw ConfigError("bilevel needs t1 >= 0 and t2 >= 1");
  if (!(inner_lr > 0) || !(outer_lr > 0))
    throw ConfigError("bilevel learning rates must be positive");
  if (!std::isfinite(lambda_init))
    throw ConfigError("lambda_init must be finite");
  if (full_batch_limit < 0)
    throw ConfigError("full_batch_limit must be non-negative");
}

LabeledSet LabeledSet::subset(const IndexList& rows) const {
  LabeledSet out;
  out.x = x(rows, Eigen::all);
  out.y.reserve(rows.size());
  for (Index r : rows) out.y.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

LabeledSet LabeledSet::from(const FeatureDataset& ds, const IndexList& idx) {
  return {ds.rows(idx), ds.labels_of(idx)};
}

BatchSchedule BatchSchedule::full(Index n, int steps) {
  BatchSchedule s;
  IndexList all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  s.batches.assign(static_cast<std::size_t>(steps), all);
  return s;
}

BatchSchedule BatchSchedule::sampled(Index n, Index batch_size, int steps,
                                     std::uint64_t seed) {
  if (batch_size >= n) {
    BatchSchedule s = full(n, steps);
    s.seed = seed;
    return s;
  }
  BatchSchedule s;
  s.seed = seed;
  Rng rng(seed);
  s.batches.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t)
    s.batches.push_back(sample_without_replacement(n, batch_size, rng));
  return s;
}

UnrollResult inner_unroll_with_tangent(const ModelParams& beta0, double lambda,
                                       const BatchSchedule& sched,
                                       const BilevelConfig& cfg,
                                       const LabeledSet& train) {
  UnrollResult out{beta0, {Matrix::Zero(beta0.weights.rows(),
                                        beta0.weights.cols())}};
  Matrix& beta = out.params.weights;
  Matrix& v = out.tangent.v;
  int step = 0;
  for (const IndexList& rows : sched.batches) {
    const bool full = static_cast<Index>(rows.size()) == train.size();
    const LabeledSet batch = full ? LabeledSet{} : train.subset(rows);
    const LabeledSet& b = full ? train : batch;

    const GradPair g = grad(out.params, b.x, b.y);
    const Matrix hv = hvp(out.params, b.x, b.y, lambda, v);
    // Both updates read beta_t, so the tangent is advanced first.
    v -= cfg.inner_lr * (hv + g.g_firth);
    beta -= cfg.inner_lr * g.combined(lambda);
    if (!beta.allFinite()) numeric_abort("parameters", lambda, step);
    if (!v.allFinite()) numeric_abort("tangent", lambda, step);
    ++step;
  }
  return out;
}

double hypergradient(const ModelParams& beta0, double lambda,
                     const BatchSchedule& sched, const BilevelConfig& cfg,
                     const LabeledSet& train, const LabeledSet& val) {
  if (val.size() == 0) throw ConfigError("hypergradient needs validation data");
  const UnrollResult u =
      inner_unroll_with_tangent(beta0, lambda, sched, cfg, train);
  const Matrix gv = grad_ce(u.params, val.x, val.y);
  return gv.cwiseProduct(u.tangent.v).sum();
}

double unrolled_val_ce(const ModelParams& beta0, double lambda,
                       const BatchSchedule& sched, const BilevelConfig& cfg,
                       const LabeledSet& train, const LabeledSet& val) {
  ModelParams beta = beta0;
  for (const IndexList& rows : sched.batches) {
    const LabeledSet b = train.subset(rows);
    beta.weights -= cfg.inner_lr * grad(beta, b.x, b.y).combined(lambda);
  }
  return loss(beta, val.x, val.y, 0.0).ce;
}

SolveResult solve_lambda(const ModelParams& beta_current, double lambda_init,
                         const BilevelConfig& cfg, const LabeledSet& train,
                         const LabeledSet& val, Index batch_size,
                         std::uint64_t seed) {
  cfg.validate();
  SolveResult res{lambda_init, {}};
  if (cfg.t1 == 0) return res;

  const Index n = train.size();
  const Index bs = n <= cfg.full_batch_limit ? n : batch_size;
  ScalarAdam adam({cfg.outer_lr, 0.9, 0.999, 1e-8});
  double lambda = lambda_init;
  for (int tau = 0; tau < cfg.t1; ++tau) {
    const BatchSchedule sched = BatchSchedule::sampled(
        n, bs, cfg.t2, derive_seed(seed, Stream::kBilevelBatches,
                                   static_cast<std::uint64_t>(tau)));
    const double h = hypergradient(beta_current, lambda, sched, cfg, train, val);
    res.trace.push_back({tau, lambda, h});
    lambda = cfg.outer_optimizer == OuterOptimizer::kAdam
                 ? adam.step(lambda, h)
                 : lambda - cfg.outer_lr * h;
    if (!std::isfinite(lambda)) {
      std::ostringstream os;
      os.precision(17);
      os << "lambda became non-finite at outer step " << tau
         << " (hypergradient=" << h << ")";
      throw NumericError(os.str());
    }
  }
  res.lambda = lambda;
  return res;
}

}  // namespace chain
