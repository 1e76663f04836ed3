#pragma once

#include "chain/data.hpp"
#include "chain/model.hpp"

#include <cstdint>
#include <vector>

namespace chain {

enum class OuterOptimizer { kAdam, kSgd };

struct BilevelConfig {
  int t1 = 1;             // outer steps per solve
  int t2 = 5;             // inner SGD steps per unroll
  double inner_lr = 0.1;  // plain SGD
  double outer_lr = 0.05;
  OuterOptimizer outer_optimizer = OuterOptimizer::kAdam;
  double lambda_init = 0.0;
  // Training sets up to this size are unrolled full-batch; larger ones use
  // the trainer's minibatch rule.
  Index full_batch_limit = 0;

  void validate() const;
};

/// Labeled examples materialised as a dense batch.
struct LabeledSet {
  Matrix x;
  std::vector<int> y;

  Index size() const { return x.rows(); }
  LabeledSet subset(const IndexList& rows) const;
  static LabeledSet from(const FeatureDataset& ds, const IndexList& idx);
};

/// dbeta/dlambda carried along the unrolled trajectory.
struct TangentState {
  Matrix v;
};

/// Fixed sequence of minibatches (row positions into a LabeledSet), replayed
/// identically for the primal and tangent passes.
struct BatchSchedule {
  std::uint64_t seed = 0;
  std::vector<IndexList> batches;

  static BatchSchedule full(Index n, int steps);
  /// Each step draws batch_size rows without replacement. batch_size >= n
  /// yields the full batch.
  static BatchSchedule sampled(Index n, Index batch_size, int steps,
                               std::uint64_t seed);
};

struct UnrollResult {
  ModelParams params;
  TangentState tangent;
};

/// T2 steps of plain SGD on ce + lambda * firth_kl, carrying the forward-mode
/// tangent:
///   beta <- beta - lr * (g_ce + lambda * g_firth)
///   v    <- v    - lr * (H(beta, lambda) v + g_firth)
/// Runs one step per schedule entry.
UnrollResult inner_unroll_with_tangent(const ModelParams& beta0, double lambda,
                                       const BatchSchedule& sched,
                                       const BilevelConfig& cfg,
                                       const LabeledSet& train);

/// d/dlambda of validation cross-entropy at the end of the unroll.
double hypergradient(const ModelParams& beta0, double lambda,
                     const BatchSchedule& sched, const BilevelConfig& cfg,
                     const LabeledSet& train, const LabeledSet& val);

/// Validation cross-entropy at the end of the unroll (primal only).
double unrolled_val_ce(const ModelParams& beta0, double lambda,
                       const BatchSchedule& sched, const BilevelConfig& cfg,
                       const LabeledSet& train, const LabeledSet& val);

struct HyperStep {
  int outer_step = 0;
  double lambda = 0.0;  // value the hypergradient was evaluated at
  double hypergradient = 0.0;
};

struct SolveResult {
  double lambda = 0.0;
  std::vector<HyperStep> trace;
};

/// T1 outer steps on lambda. Each step draws a fresh schedule (seeded by
/// `seed` and the step number) and unrolls from a copy of beta_current.
SolveResult solve_lambda(const ModelParams& beta_current, double lambda_init,
                         const BilevelConfig& cfg, const LabeledSet& train,
                         const LabeledSet& val, Index batch_size,
                         std::uint64_t seed);

}  // namespace chain
