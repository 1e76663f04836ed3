#pragma once

#include "chain/data.hpp"
#include "chain/model.hpp"
#include "chain/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace chain {

enum class QueryStrategy { kEntropy, kCoreset, kBadge, kRandom };

std::string_view to_string(QueryStrategy s);
/// Throws ConfigError for unknown names.
QueryStrategy parse_query_strategy(std::string_view name);

/// Top-M predictive entropy over the unlabeled set, ties to smaller index.
IndexList select_entropy(const ModelParams& params, const FeatureDataset& ds,
                         const PoolState& pool, Index m);

/// k-center greedy in raw feature space. Distances start from the labeled
/// set; with no labeled points the first pick is the smallest unlabeled index.
IndexList select_coreset(const FeatureDataset& ds, const PoolState& pool,
                         Index m);

/// Per unlabeled point (in pool order): vec((p - onehot(argmax p)) x~^T),
/// row-major over the C x (d+1) gradient.
Matrix badge_embeddings(const ModelParams& params, const FeatureDataset& ds,
                        const PoolState& pool);

/// k-means++ seeding over the rows of `points`. Returns row positions.
/// `first` forces the first center; otherwise it is drawn uniformly.
IndexList kmeanspp_seeding(const Matrix& points, Index m, Rng& rng,
                           std::optional<Index> first = std::nullopt);

IndexList select_badge(const ModelParams& params, const FeatureDataset& ds,
                       const PoolState& pool, Index m, std::uint64_t seed);

IndexList select_random(const PoolState& pool, Index m, std::uint64_t seed);

/// Dispatches on the strategy tag.
IndexList select(QueryStrategy s, const ModelParams& params,
                 const FeatureDataset& ds, const PoolState& pool, Index m,
                 std::uint64_t seed);

}  // namespace chain
