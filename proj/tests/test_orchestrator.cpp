#include "chain/errors.hpp"
#include "chain/orchestrator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace chain {
namespace {

FeatureDataset mixture() {
  return synth_gaussian_mixture({4, 5, 1.0, 1.0, 100, 21});
}

ExperimentConfig quick_cfg(TrainerKind kind, QueryStrategy s, int m, int budget) {
  ExperimentConfig cfg;
  cfg.trainer = kind;
  cfg.strategy = s;
  cfg.query_size = m;
  cfg.total_budget = budget;
  cfg.seeds = {1, 2};
  cfg.train.total_steps = 40;
  cfg.train.lr = 0.01;
  return cfg;
}

void expect_same_records(const SeedResult& a, const SeedResult& b) {
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t r = 0; r < a.rounds.size(); ++r) {
    EXPECT_EQ(a.rounds[r].test_accuracy, b.rounds[r].test_accuracy);
    EXPECT_EQ(a.rounds[r].val_ce, b.rounds[r].val_ce);
    EXPECT_EQ(a.rounds[r].final_lambda, b.rounds[r].final_lambda);
    EXPECT_EQ(a.rounds[r].labeled, b.rounds[r].labeled);
    EXPECT_EQ(a.rounds[r].lambda_traj.points, b.rounds[r].lambda_traj.points);
  }
}

TEST(ExperimentConfig, RoundsFromBudget) {
  ExperimentConfig cfg;
  cfg.query_size = 10;
  cfg.total_budget = 500;
  EXPECT_EQ(cfg.rounds(), 50);
  cfg.query_size = 100;
  EXPECT_EQ(cfg.rounds(), 5);
  cfg.query_size = 30;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(TrainerKindNames, RoundTrip) {
  for (auto k : {TrainerKind::kOrig, TrainerKind::kChain, TrainerKind::kFbrBo,
                 TrainerKind::kFbrGs})
    EXPECT_EQ(parse_trainer_kind(to_string(k)), k);
  EXPECT_THROW(parse_trainer_kind("bayes"), ConfigError);
}

TEST(RunExperiment, RoundCountsAndGrowth) {
  const FeatureDataset ds = mixture();
  for (auto s : {QueryStrategy::kEntropy, QueryStrategy::kCoreset,
                 QueryStrategy::kBadge, QueryStrategy::kRandom}) {
    const auto cfg = quick_cfg(TrainerKind::kChain, s, 20, 100);
    const ExperimentResult res = run_experiment(cfg, ds);
    ASSERT_EQ(res.per_seed.size(), 2u);
    for (const SeedResult& sr : res.per_seed) {
      ASSERT_EQ(sr.rounds.size(), 5u);
      for (const RoundRecord& rec : sr.rounds) {
        EXPECT_EQ(rec.labeled_count, rec.round * 20);
        EXPECT_EQ(static_cast<Index>(rec.labeled.size()), rec.labeled_count);
        EXPECT_GE(rec.test_accuracy, 0.0);
        EXPECT_LE(rec.test_accuracy, 1.0);
      }
      EXPECT_EQ(sr.rounds.back().labeled_count, 100);
    }
  }
}

TEST(RunExperiment, FirstRoundSharedAcrossTrainers) {
  const FeatureDataset ds = mixture();
  const SeedResult orig = run_seed(quick_cfg(TrainerKind::kOrig, QueryStrategy::kEntropy, 10, 30), ds, 5);
  const SeedResult chain = run_seed(quick_cfg(TrainerKind::kChain, QueryStrategy::kEntropy, 10, 30), ds, 5);
  EXPECT_EQ(orig.rounds[0].labeled, chain.rounds[0].labeled);
}

TEST(RunExperiment, Reproducible) {
  const FeatureDataset ds = mixture();
  for (auto kind : {TrainerKind::kOrig, TrainerKind::kChain, TrainerKind::kFbrBo,
                    TrainerKind::kFbrGs}) {
    const auto cfg = quick_cfg(kind, QueryStrategy::kBadge, 10, 30);
    const ExperimentResult a = run_experiment(cfg, ds);
    const ExperimentResult b = run_experiment(cfg, ds);
    for (std::size_t i = 0; i < a.per_seed.size(); ++i)
      expect_same_records(a.per_seed[i], b.per_seed[i]);
  }
}

TEST(RunExperiment, ParallelSeedsMatchSequential) {
  const FeatureDataset ds = mixture();
  auto cfg = quick_cfg(TrainerKind::kChain, QueryStrategy::kRandom, 10, 30);
  cfg.seeds = {3, 4, 5, 6};
  const ExperimentResult seq = run_experiment(cfg, ds, {1, {}});
  const ExperimentResult par = run_experiment(cfg, ds, {3, {}});
  for (std::size_t i = 0; i < seq.per_seed.size(); ++i) {
    EXPECT_EQ(seq.per_seed[i].seed, par.per_seed[i].seed);
    expect_same_records(seq.per_seed[i], par.per_seed[i]);
  }
  EXPECT_EQ(seq.final_acc_mean, par.final_acc_mean);
}

TEST(RunExperiment, CallbackSeesEveryRound) {
  const FeatureDataset ds = mixture();
  const auto cfg = quick_cfg(TrainerKind::kOrig, QueryStrategy::kRandom, 10, 40);
  int calls = 0;
  run_experiment(cfg, ds, {1, [&](std::uint64_t, const RoundRecord&) { ++calls; }});
  EXPECT_EQ(calls, 8);
}

TEST(RunExperiment, BudgetLargerThanPoolIsConfigError) {
  const FeatureDataset ds = synth_gaussian_mixture({2, 2, 1.0, 1.0, 20, 1});
  auto cfg = quick_cfg(TrainerKind::kOrig, QueryStrategy::kRandom, 10, 40);
  EXPECT_THROW(run_experiment(cfg, ds), ConfigError);
}

TEST(PairedT, HandExample) {
  const std::vector<double> a{1, 2, 3}, b{2, 2, 5};
  const TTest t = paired_t(a, b);
  EXPECT_NEAR(t.t, -std::sqrt(3.0), 1e-12);
  EXPECT_EQ(t.dof, 2);
}

TEST(PairedT, ConstantShiftHasNoVariance) {
  const std::vector<double> b{0.1, 0.2, 0.3, 0.7};
  std::vector<double> a;
  for (double v : b) a.push_back(v + 0.05);
  EXPECT_THROW(paired_t(a, b), NumericError);
}

TEST(PairedT, SignAndShapeChecks) {
  const std::vector<double> lo{0.1, 0.2, 0.25}, hi{0.3, 0.35, 0.6};
  EXPECT_LT(paired_t(lo, hi).t, 0.0);
  EXPECT_GT(paired_t(hi, lo).t, 0.0);
  EXPECT_THROW(paired_t(std::vector<double>{1.0}, std::vector<double>{2.0}), ConfigError);
  EXPECT_THROW(paired_t(lo, std::vector<double>{1.0, 2.0}), ConfigError);
}

}  // namespace
}  // namespace chain
