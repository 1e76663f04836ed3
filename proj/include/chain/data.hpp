#pragma once

#include "chain/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace chain {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Pool universe: N×d features with integer labels in [0, C).
struct FeatureDataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::string name;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  /// Throws FormatError when any invariant is broken.
  void validate() const;

  /// Rows and labels for a subset of indices, in the given order.
  Matrix rows(const IndexList& idx) const;
  std::vector<int> labels_of(const IndexList& idx) const;
};

/// Disjoint index sets over a dataset. Every set is kept sorted ascending.
struct PoolState {
  IndexList labeled;
  IndexList unlabeled;
  IndexList validation;
  IndexList test;

  bool operator==(const PoolState&) const = default;
};

struct SynthSpec {
  int num_classes = 2;
  int dim = 2;
  double class_separation = 1.0;
  double within_class_stddev = 1.0;
  int points_per_class = 1;
  std::uint64_t seed = 0;
};

/// Draws validation and test uniformly without replacement; everything else
/// starts unlabeled.
PoolState make_pool(const FeatureDataset& ds, Index val_size, Index test_size,
                    std::uint64_t seed);

/// Isotropic Gaussian clusters; class c is centred at
/// separation * e_{c mod d} * (1 + floor(c / d)). Rows are class-major.
FeatureDataset synth_gaussian_mixture(const SynthSpec& spec);

/// Moves `selected` from unlabeled to labeled. Throws std::logic_error if
/// any index is not currently unlabeled or appears twice.
PoolState query_commit(const PoolState& pool, const IndexList& selected);

/// k distinct values from [0, n) in draw order (partial Fisher-Yates).
IndexList sample_without_replacement(Index n, Index k, Rng& rng);

/// True when the four sets are pairwise disjoint and within [0, n).
bool pool_is_consistent(const PoolState& pool, Index n);

}  // namespace chain
