#include "chain/query.hpp"

#include "chain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace chain {
namespace {

void check_m(const PoolState& pool, Index m) {
  if (m < 0 || m > static_cast<Index>(pool.unlabeled.size()))
    throw ConfigError("query size " + std::to_string(m) +
                      " exceeds the unlabeled pool (" +
                      std::to_string(pool.unlabeled.size()) + ")");
}

IndexList map_positions(const IndexList& pos, const IndexList& universe) {
  IndexList out;
  out.reserve(pos.size());
  for (Index p : pos) out.push_back(universe[static_cast<std::size_t>(p)]);
  return out;
}

}  // namespace

std::string_view to_string(QueryStrategy s) {
  switch (s) {
    case QueryStrategy::kEntropy: return "entropy";
    case QueryStrategy::kCoreset: return "coreset";
    case QueryStrategy::kBadge: return "badge";
    case QueryStrategy::kRandom: return "random";
  }
  return "?";
}

QueryStrategy parse_query_strategy(std::string_view name) {
  for (auto s : {QueryStrategy::kEntropy, QueryStrategy::kCoreset,
                 QueryStrategy::kBadge, QueryStrategy::kRandom})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown query strategy '" + std::string(name) + "'");
}

IndexList select_entropy(const ModelParams& params, const FeatureDataset& ds,
                         const PoolState& pool, Index m) {
  check_m(pool, m);
  if (m == 0) return {};
  const Matrix p = probs(params, ds.rows(pool.unlabeled));
  std::vector<double> h(static_cast<std::size_t>(p.rows()), 0.0);
  for (Index i = 0; i < p.rows(); ++i)
    for (Index k = 0; k < p.cols(); ++k)
      if (p(i, k) > 0) h[static_cast<std::size_t>(i)] -= p(i, k) * std::log(p(i, k));

  IndexList pos(h.size());
  std::iota(pos.begin(), pos.end(), Index{0});
  // Unlabeled is sorted, so position order is dataset-index order.
  std::partial_sort(pos.begin(), pos.begin() + m, pos.end(),
                    [&](Index a, Index b) {
                      const double ha = h[static_cast<std::size_t>(a)];
                      const double hb = h[static_cast<std::size_t>(b)];
                      return ha > hb || (ha == hb && a < b);
                    });
  pos.resize(static_cast<std::size_t>(m));
  return map_positions(pos, pool.unlabeled);
}

IndexList select_coreset(const FeatureDataset& ds, const PoolState& pool,
                         Index m) {
  check_m(pool, m);
  if (m == 0) return {};
  const Matrix u = ds.rows(pool.unlabeled);
  const Index nu = u.rows();
  Vector mind = Vector::Constant(nu, std::numeric_limits<double>::infinity());
  for (Index l : pool.labeled) {
    const auto row = ds.features.row(l);
    mind = mind.cwiseMin((u.rowwise() - row).rowwise().squaredNorm());
  }

  IndexList picks;
  picks.reserve(static_cast<std::size_t>(m));
  std::vector<bool> taken(static_cast<std::size_t>(nu), false);
  for (Index s = 0; s < m; ++s) {
    Index best = -1;
    for (Index i = 0; i < nu; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || mind(i) > mind(best)) best = i;
    }
    taken[static_cast<std::size_t>(best)] = true;
    picks.push_back(best);
    mind = mind.cwiseMin((u.rowwise() - u.row(best)).rowwise().squaredNorm());
  }
  return map_positions(picks, pool.unlabeled);
}

Matrix badge_embeddings(const ModelParams& params, const FeatureDataset& ds,
                        const PoolState& pool) {
  const Matrix x = ds.rows(pool.unlabeled);
  Matrix r = probs(params, x);
  const std::vector<int> yhat = argmax_rows(r);
  for (Index i = 0; i < r.rows(); ++i) r(i, yhat[static_cast<std::size_t>(i)]) -= 1.0;

  const Index d = x.cols();
  const Index c = r.cols();
  Matrix emb(x.rows(), c * (d + 1));
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index k = 0; k < c; ++k) {
      emb.row(i).segment(k * (d + 1), d) = r(i, k) * x.row(i);
      emb(i, k * (d + 1) + d) = r(i, k);
    }
  }
  return emb;
}

IndexList kmeanspp_seeding(const Matrix& points, Index m, Rng& rng,
                           std::optional<Index> first) {
  const Index n = points.rows();
  if (m < 0 || m > n) throw ConfigError("k-means++ asked for too many centers");
  IndexList centers;
  if (m == 0) return centers;
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  auto add = [&](Index c, Vector& d2) {
    centers.push_back(c);
    chosen[static_cast<std::size_t>(c)] = true;
    d2 = d2.cwiseMin((points.rowwise() - points.row(c)).rowwise().squaredNorm());
    d2(c) = 0.0;
  };

  Vector d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  if (first) {
    if (*first < 0 || *first >= n) throw ConfigError("forced center out of range");
    add(*first, d2);
  } else {
    add(std::uniform_int_distribution<Index>(0, n - 1)(rng), d2);
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (static_cast<Index>(centers.size()) < m) {
    const double mass = d2.sum();
    Index pick = -1;
    if (mass > 0.0) {
      const double target = unif(rng) * mass;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (d2(i) <= 0.0) continue;
        acc += d2(i);
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every remaining point coincides with a center: uniform fallback.
      IndexList rest;
      for (Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) rest.push_back(i);
      pick = rest[static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(
          0, rest.size() - 1)(rng))];
    }
    add(pick, d2);
  }
  return centers;
}

IndexList select_badge(const ModelParams& params, const FeatureDataset& ds,
                       const PoolState& pool, Index m, std::uint64_t seed) {
  check_m(pool, m);
  if (m == 0) return {};
  Rng rng = make_rng(seed, Stream::kBadge);
  const Matrix emb = badge_embeddings(params, ds, pool);
  return map_positions(kmeanspp_seeding(emb, m, rng), pool.unlabeled);
}

IndexList select_random(const PoolState& pool, Index m, std::uint64_t seed) {
  check_m(pool, m);
  Rng rng = make_rng(seed, Stream::kRandomQuery);
  return map_positions(
      sample_without_replacement(static_cast<Index>(pool.unlabeled.size()), m, rng),
      pool.unlabeled);
}

IndexList select(QueryStrategy s, const ModelParams& params,
                 const FeatureDataset& ds, const PoolState& pool, Index m,
                 std::uint64_t seed) {
  switch (s) {
    case QueryStrategy::kEntropy: return select_entropy(params, ds, pool, m);
    case QueryStrategy::kCoreset: return select_coreset(ds, pool, m);
    case QueryStrategy::kBadge: return select_badge(params, ds, pool, m, seed);
    case QueryStrategy::kRandom: return select_random(pool, m, seed);
  }
  throw ConfigError("unhandled query strategy");
}

}  // namespace chain
