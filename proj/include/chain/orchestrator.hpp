#pragma once

#include "chain/data.hpp"
#include "chain/query.hpp"
#include "chain/trainer.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace chain {

enum class TrainerKind { kOrig, kChain, kFbrBo, kFbrGs };

std::string_view to_string(TrainerKind k);
TrainerKind parse_trainer_kind(std::string_view name);

struct ExperimentConfig {
  QueryStrategy strategy = QueryStrategy::kRandom;
  TrainerKind trainer = TrainerKind::kChain;
  int query_size = 10;      // M
  int total_budget = 500;   // M * R
  std::vector<std::uint64_t> seeds = {0};
  Index val_size = -1;      // -1: 10% of the dataset
  Index test_size = -1;     // -1: 20% of the dataset
  TrainConfig train;
  std::vector<double> grid = kDefaultLambdaGrid;

  int rounds() const { return total_budget / query_size; }
  Index resolved_val_size(Index n) const;
  Index resolved_test_size(Index n) const;
  void validate() const;
};

struct RoundRecord {
  int round = 0;
  Index labeled_count = 0;
  double test_accuracy = 0.0;
  double val_ce = 0.0;
  double final_lambda = 0.0;
  LambdaTrajectory lambda_traj;
  IndexList labeled;  // training set used this round
  std::int64_t wall_us = 0;

  std::int64_t wall_ms() const { return wall_us / 1000; }
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedResult> per_seed;  // in config.seeds order
  double final_acc_mean = 0.0;
  double final_acc_stddev = 0.0;     // sample stddev; 0 for a single seed
};

using RoundCallback =
    std::function<void(std::uint64_t seed, const RoundRecord& rec)>;

struct RunOptions {
  unsigned threads = 1;     // seeds run concurrently up to this many
  RoundCallback on_round;   // may be called from worker threads
};

/// One active-learning run: random first query, then R rounds of
/// train-from-scratch, evaluate, and query with the freshly trained model.
SeedResult run_seed(const ExperimentConfig& cfg, const FeatureDataset& ds,
                    std::uint64_t seed, const RoundCallback& on_round = {});

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const FeatureDataset& ds,
                                const RunOptions& opts = {});

struct TTest {
  double t = 0.0;
  int dof = 0;
};

/// Paired t statistic on a - b. Throws ConfigError on size mismatch or
/// n < 2, NumericError when the differences have zero variance.
TTest paired_t(std::span<const double> a, std::span<const double> b);

}  // namespace chain
