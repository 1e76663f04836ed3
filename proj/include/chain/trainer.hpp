#pragma once

#include "chain/bilevel.hpp"
#include "chain/data.hpp"
#include "chain/model.hpp"

#include <cstdint>
#include <vector>

namespace chain {

enum class MainOptimizer { kAdam, kSgdMomentum };

struct TrainConfig {
  int total_steps = 500;
  double lr = 1e-3;
  MainOptimizer main_optimizer = MainOptimizer::kAdam;
  double batch_fraction = 0.1;
  int early_stop_patience = 5;  // evaluations without improvement
  std::uint64_t seed = 0;
  BilevelConfig bilevel;

  void validate() const;
  /// max(1, floor(batch_fraction * n))
  Index batch_size(Index n) const;
};

struct LambdaPoint {
  int step = 0;
  double lambda = 0.0;
  bool operator==(const LambdaPoint&) const = default;
};

struct LambdaTrajectory {
  std::vector<LambdaPoint> points;
  double final_lambda = 0.0;
};

struct TrainOutcome {
  ModelParams params;  // best-validation checkpoint
  LambdaTrajectory lambda_traj;
  int steps_run = 0;
  bool stopped_early = false;
  double best_val_loss = 0.0;
};

/// Curriculum training: every t2 steps lambda is re-solved from the current
/// weights (warm-started from the previous lambda), then one main-optimizer
/// step is taken on ce + lambda * firth_kl.
TrainOutcome train_chain(const PoolState& pool, const FeatureDataset& ds,
                         const TrainConfig& cfg);

/// Same loop with lambda held constant.
TrainOutcome train_fixed_lambda(const PoolState& pool, const FeatureDataset& ds,
                                const TrainConfig& cfg, double lambda);

/// One bilevel solve from zero weights, then fixed-lambda training.
TrainOutcome train_fbr_bo(const PoolState& pool, const FeatureDataset& ds,
                          const TrainConfig& cfg);

struct GridSearchOutcome {
  TrainOutcome outcome;
  double chosen_lambda = 0.0;
  std::vector<double> arm_val_losses;  // one per grid entry
};

inline const std::vector<double> kDefaultLambdaGrid = {0.0, 0.01, 0.1, 1.0,
                                                       3.0};

/// Trains one model per grid value and keeps the one with the lowest
/// validation cross-entropy (ties to the smaller lambda).
GridSearchOutcome train_fbr_gs(const PoolState& pool, const FeatureDataset& ds,
                               const TrainConfig& cfg,
                               const std::vector<double>& grid);

}  // namespace chain
