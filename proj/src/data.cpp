#include "chain/data.hpp"

#include "chain/errors.hpp"
#include "chain/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chain {

void FeatureDataset::validate() const {
  if (num_classes < 2) throw FormatError("dataset needs at least 2 classes");
  if (features.rows() < 1 || features.cols() < 1)
    throw FormatError("dataset must have N >= 1 and d >= 1");
  if (static_cast<Index>(labels.size()) != features.rows())
    throw FormatError("label count does not match row count");
  if (!features.allFinite()) throw FormatError("non-finite feature value");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw FormatError("label out of range at row " + std::to_string(i));
  }
}

Matrix FeatureDataset::rows(const IndexList& idx) const {
  return features(idx, Eigen::all);
}

std::vector<int> FeatureDataset::labels_of(const IndexList& idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (Index i : idx) out.push_back(labels[static_cast<std::size_t>(i)]);
  return out;
}

PoolState make_pool(const FeatureDataset& ds, Index val_size, Index test_size,
                    std::uint64_t seed) {
  const Index n = ds.size();
  if (val_size < 0 || test_size < 0 || val_size + test_size >= n)
    throw ConfigError("validation + test size (" +
                      std::to_string(val_size + test_size) +
                      ") must be smaller than the dataset (" +
                      std::to_string(n) + ")");
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng = make_rng(seed, Stream::kPool);
  std::shuffle(perm.begin(), perm.end(), rng);

  PoolState pool;
  auto vbeg = perm.begin();
  auto tbeg = vbeg + val_size;
  auto ubeg = tbeg + test_size;
  pool.validation.assign(vbeg, tbeg);
  pool.test.assign(tbeg, ubeg);
  pool.unlabeled.assign(ubeg, perm.end());
  std::sort(pool.validation.begin(), pool.validation.end());
  std::sort(pool.test.begin(), pool.test.end());
  std::sort(pool.unlabeled.begin(), pool.unlabeled.end());
  return pool;
}

FeatureDataset synth_gaussian_mixture(const SynthSpec& spec) {
  if (spec.num_classes < 2 || spec.dim < 1 || spec.points_per_class < 1)
    throw ConfigError("synth spec counts must be positive (C >= 2)");
  if (!(spec.class_separation > 0.0) || !(spec.within_class_stddev >= 0.0) ||
      !std::isfinite(spec.class_separation) ||
      !std::isfinite(spec.within_class_stddev))
    throw ConfigError("synth spec needs separation > 0 and stddev >= 0");

  const Index n = static_cast<Index>(spec.num_classes) * spec.points_per_class;
  FeatureDataset ds;
  ds.features = Matrix::Zero(n, spec.dim);
  ds.labels.resize(static_cast<std::size_t>(n));
  ds.num_classes = spec.num_classes;
  ds.name = "synth";

  Rng rng = make_rng(spec.seed, Stream::kSynth);
  std::normal_distribution<double> normal(0.0, 1.0);
  Index row = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    const int axis = c % spec.dim;
    const double scale = spec.class_separation * (1 + c / spec.dim);
    for (int j = 0; j < spec.points_per_class; ++j, ++row) {
      for (int k = 0; k < spec.dim; ++k) {
        // Draw even when stddev is zero so the stream layout stays fixed.
        const double z = normal(rng);
        ds.features(row, k) = spec.within_class_stddev * z;
      }
      ds.features(row, axis) += scale;
      ds.labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return ds;
}

PoolState query_commit(const PoolState& pool, const IndexList& selected) {
  IndexList sel = selected;
  std::sort(sel.begin(), sel.end());
  if (std::adjacent_find(sel.begin(), sel.end()) != sel.end())
    throw std::logic_error("query selected the same index twice");
  for (Index i : sel) {
    if (!std::binary_search(pool.unlabeled.begin(), pool.unlabeled.end(), i))
      throw std::logic_error("queried index " + std::to_string(i) +
                             " is not in the unlabeled set");
  }
  PoolState out = pool;
  out.unlabeled.clear();
  std::set_difference(pool.unlabeled.begin(), pool.unlabeled.end(),
                      sel.begin(), sel.end(),
                      std::back_inserter(out.unlabeled));
  out.labeled.clear();
  std::merge(pool.labeled.begin(), pool.labeled.end(), sel.begin(), sel.end(),
             std::back_inserter(out.labeled));
  return out;
}

IndexList sample_without_replacement(Index n, Index k, Rng& rng) {
  if (k < 0 || k > n) throw ConfigError("cannot draw " + std::to_string(k) +
                                        " of " + std::to_string(n));
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(pick(rng))]);
  }
  perm.resize(static_cast<std::size_t>(k));
  return perm;
}

bool pool_is_consistent(const PoolState& pool, Index n) {
  IndexList all;
  for (const IndexList* s :
       {&pool.labeled, &pool.unlabeled, &pool.validation, &pool.test}) {
    if (!std::is_sorted(s->begin(), s->end())) return false;
    all.insert(all.end(), s->begin(), s->end());
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) return false;
  return all.empty() || (all.front() >= 0 && all.back() < n);
}

}  // namespace chain
