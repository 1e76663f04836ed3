#include "chain/data.hpp"
#include "chain/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

namespace chain {
namespace {

FeatureDataset tiny(Index n) {
  FeatureDataset ds;
  ds.features = Matrix::Zero(n, 2);
  ds.labels.assign(static_cast<std::size_t>(n), 0);
  ds.num_classes = 2;
  return ds;
}

TEST(MakePool, SplitsSizes) {
  const PoolState p = make_pool(tiny(100), 10, 20, 7);
  EXPECT_EQ(p.unlabeled.size(), 70u);
  EXPECT_EQ(p.validation.size(), 10u);
  EXPECT_EQ(p.test.size(), 20u);
  EXPECT_TRUE(p.labeled.empty());
  EXPECT_TRUE(pool_is_consistent(p, 100));
}

TEST(MakePool, SameSeedSamePool) {
  EXPECT_EQ(make_pool(tiny(100), 10, 20, 3), make_pool(tiny(100), 10, 20, 3));
  EXPECT_NE(make_pool(tiny(100), 10, 20, 3), make_pool(tiny(100), 10, 20, 4));
}

TEST(MakePool, OversizedSplitIsConfigError) {
  EXPECT_THROW(make_pool(tiny(50), 100, 0, 0), ConfigError);
  EXPECT_THROW(make_pool(tiny(50), 25, 25, 0), ConfigError);
}

TEST(Synth, SinglePointPerClass) {
  SynthSpec s{3, 2, 5.0, 1.0, 1, 11};
  const FeatureDataset ds = synth_gaussian_mixture(s);
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 2}));
}

TEST(Synth, ZeroStddevGivesClassMeans) {
  SynthSpec s{5, 2, 3.0, 0.0, 4, 1};
  const FeatureDataset ds = synth_gaussian_mixture(s);
  for (Index i = 0; i < ds.size(); ++i) {
    const int c = ds.labels[static_cast<std::size_t>(i)];
    Vector mean = Vector::Zero(2);
    mean(c % 2) = 3.0 * (1 + c / 2);
    EXPECT_EQ(ds.features.row(i).transpose(), mean) << "row " << i;
  }
}

TEST(Synth, BitwiseReproducible) {
  SynthSpec s{4, 3, 2.0, 0.7, 25, 99};
  const FeatureDataset a = synth_gaussian_mixture(s);
  const FeatureDataset b = synth_gaussian_mixture(s);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NO_THROW(a.validate());
}

TEST(Synth, RejectsBadSpec) {
  EXPECT_THROW(synth_gaussian_mixture({1, 2, 1.0, 1.0, 5, 0}), ConfigError);
  EXPECT_THROW(synth_gaussian_mixture({2, 2, 0.0, 1.0, 5, 0}), ConfigError);
  EXPECT_THROW(synth_gaussian_mixture({2, 2, 1.0, -1.0, 5, 0}), ConfigError);
}

TEST(QueryCommit, MovesSelection) {
  PoolState p;
  p.unlabeled = {1, 2, 3};
  p.validation = {0};
  const PoolState q = query_commit(p, {2});
  EXPECT_EQ(q.labeled, (IndexList{2}));
  EXPECT_EQ(q.unlabeled, (IndexList{1, 3}));
  EXPECT_EQ(q.validation, p.validation);
}

TEST(QueryCommit, RejectsNonUnlabeled) {
  PoolState p;
  p.unlabeled = {1, 2, 3};
  p.validation = {0};
  EXPECT_THROW(query_commit(p, {0}), std::logic_error);
  EXPECT_THROW(query_commit(p, {1, 1}), std::logic_error);
}

TEST(QueryCommit, EmptySelectionIsIdentity) {
  PoolState p;
  p.unlabeled = {1, 2, 3};
  p.labeled = {4};
  EXPECT_EQ(query_commit(p, {}), p);
}

TEST(QueryCommit, DisjointnessAndGrowthProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 40 + trial;
    PoolState p = make_pool(tiny(n), 5, 5, static_cast<std::uint64_t>(trial));
    const Index m = 1 + trial % 4;
    for (int r = 1; static_cast<Index>(p.unlabeled.size()) >= m; ++r) {
      IndexList sel = p.unlabeled;
      std::shuffle(sel.begin(), sel.end(), rng);
      sel.resize(static_cast<std::size_t>(m));
      p = query_commit(p, sel);
      ASSERT_TRUE(pool_is_consistent(p, n));
      ASSERT_EQ(static_cast<Index>(p.labeled.size()), r * m);
    }
  }
}

TEST(SampleWithoutReplacement, DistinctInRange) {
  Rng rng(1);
  const IndexList s = sample_without_replacement(30, 30, rng);
  IndexList sorted = s;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 30; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  EXPECT_THROW(sample_without_replacement(3, 4, rng), ConfigError);
}

}  // namespace
}  // namespace chain
