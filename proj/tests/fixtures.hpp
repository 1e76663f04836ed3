#pragma once

#include "chain/bilevel.hpp"
#include "chain/data.hpp"

#include <numeric>

namespace chain::fixture {

/// Train/validation sets cut from one synthetic mixture.
struct Split {
  LabeledSet train;
  LabeledSet val;
};

inline Split synthetic_split(int classes, int dim, int per_class_train,
                             int per_class_val, double sep, double sd,
                             std::uint64_t seed) {
  const FeatureDataset tr = synth_gaussian_mixture(
      {classes, dim, sep, sd, per_class_train, seed});
  const FeatureDataset va = synth_gaussian_mixture(
      {classes, dim, sep, sd, per_class_val, seed + 1000});
  IndexList all_tr(static_cast<std::size_t>(tr.size()));
  std::iota(all_tr.begin(), all_tr.end(), Index{0});
  IndexList all_va(static_cast<std::size_t>(va.size()));
  std::iota(all_va.begin(), all_va.end(), Index{0});
  return {LabeledSet::from(tr, all_tr), LabeledSet::from(va, all_va)};
}

/// A pool over a synthetic mixture with `labeled` points already labeled.
struct PoolFixture {
  FeatureDataset ds;
  PoolState pool;
};

inline PoolFixture labeled_pool(const SynthSpec& spec, Index val, Index test,
                                Index labeled, std::uint64_t seed) {
  PoolFixture f{synth_gaussian_mixture(spec), {}};
  f.pool = make_pool(f.ds, val, test, seed);
  IndexList sel(f.pool.unlabeled.begin(),
                f.pool.unlabeled.begin() + labeled);
  f.pool = query_commit(f.pool, sel);
  return f;
}

}  // namespace chain::fixture
