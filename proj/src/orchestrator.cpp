#include "chain/orchestrator.hpp"

#include "chain/errors.hpp"
#include "chain/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace chain {

std::string_view to_string(TrainerKind k) {
  switch (k) {
    case TrainerKind::kOrig: return "orig";
    case TrainerKind::kChain: return "chain";
    case TrainerKind::kFbrBo: return "fbr_bo";
    case TrainerKind::kFbrGs: return "fbr_gs";
  }
  return "?";
}

TrainerKind parse_trainer_kind(std::string_view name) {
  for (auto k : {TrainerKind::kOrig, TrainerKind::kChain, TrainerKind::kFbrBo,
                 TrainerKind::kFbrGs})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown trainer kind '" + std::string(name) + "'");
}

Index ExperimentConfig::resolved_val_size(Index n) const {
  return val_size >= 0 ? val_size : n / 10;
}

Index ExperimentConfig::resolved_test_size(Index n) const {
  return test_size >= 0 ? test_size : n / 5;
}

void ExperimentConfig::validate() const {
  if (query_size < 1) throw ConfigError("query size M must be >= 1");
  if (total_budget < query_size || total_budget % query_size != 0)
    throw ConfigError("total_budget must be a positive multiple of M");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (trainer == TrainerKind::kFbrGs && grid.empty())
    throw ConfigError("grid search needs a nonempty grid");
  train.validate();
}

SeedResult run_seed(const ExperimentConfig& cfg, const FeatureDataset& ds,
                    std::uint64_t seed, const RoundCallback& on_round) {
  cfg.validate();
  const Index n = ds.size();
  PoolState pool = make_pool(ds, cfg.resolved_val_size(n),
                             cfg.resolved_test_size(n),
                             derive_seed(seed, Stream::kPool));
  if (pool.validation.empty()) throw ConfigError("validation split is empty");
  if (pool.test.empty()) throw ConfigError("test split is empty");
  if (static_cast<Index>(pool.unlabeled.size()) < cfg.total_budget)
    throw ConfigError("budget " + std::to_string(cfg.total_budget) +
                      " exceeds the unlabeled pool (" +
                      std::to_string(pool.unlabeled.size()) + ")");

  const LabeledSet test = LabeledSet::from(ds, pool.test);
  const LabeledSet val = LabeledSet::from(ds, pool.validation);
  const Index m = cfg.query_size;
  pool = query_commit(pool, select_random(pool, m,
                                          derive_seed(seed, Stream::kFirstQuery)));

  SeedResult res;
  res.seed = seed;
  const int rounds = cfg.rounds();
  for (int r = 1; r <= rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(seed, Stream::kRound, static_cast<std::uint64_t>(r));

    TrainOutcome out;
    switch (cfg.trainer) {
      case TrainerKind::kOrig: out = train_fixed_lambda(pool, ds, tc, 0.0); break;
      case TrainerKind::kChain: out = train_chain(pool, ds, tc); break;
      case TrainerKind::kFbrBo: out = train_fbr_bo(pool, ds, tc); break;
      case TrainerKind::kFbrGs: out = train_fbr_gs(pool, ds, tc, cfg.grid).outcome; break;
    }
    const auto t1 = std::chrono::steady_clock::now();

    RoundRecord rec;
    rec.round = r;
    rec.labeled_count = static_cast<Index>(pool.labeled.size());
    rec.test_accuracy = predict_accuracy(out.params, test.x, test.y);
    rec.val_ce = loss(out.params, val.x, val.y, 0.0).ce;
    rec.final_lambda = out.lambda_traj.final_lambda;
    rec.lambda_traj = std::move(out.lambda_traj);
    rec.labeled = pool.labeled;
    rec.wall_us =
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    if (on_round) on_round(seed, rec);
    res.rounds.push_back(std::move(rec));

    if (r < rounds) {
      const std::uint64_t qseed = derive_seed(seed, Stream::kRandomQuery,
                                              static_cast<std::uint64_t>(r));
      pool = query_commit(pool, select(cfg.strategy, out.params, ds, pool, m, qseed));
    }
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const FeatureDataset& ds,
                                const RunOptions& opts) {
  cfg.validate();
  ds.validate();
  ExperimentResult result;
  result.config = cfg;
  result.per_seed.resize(cfg.seeds.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        result.per_seed[i] = run_seed(cfg, ds, cfg.seeds[i], opts.on_round);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = cfg.seeds.size();
      }
    }
  };
  const unsigned threads = std::max(
      1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(cfg.seeds.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const double k = static_cast<double>(result.per_seed.size());
  double sum = 0.0;
  for (const auto& s : result.per_seed) sum += s.rounds.back().test_accuracy;
  result.final_acc_mean = sum / k;
  double ss = 0.0;
  for (const auto& s : result.per_seed) {
    const double dlt = s.rounds.back().test_accuracy - result.final_acc_mean;
    ss += dlt * dlt;
  }
  result.final_acc_stddev = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
  return result;
}

TTest paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("paired t needs equal-length samples");
  if (a.size() < 2) throw ConfigError("paired t needs at least two pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dlt = (a[i] - b[i]) - mean;
    ss += dlt * dlt;
  }
  const double sd = std::sqrt(ss / (n - 1));
  // Differences equal up to rounding count as constant.
  if (!(sd > 1e-12 * (1.0 + std::abs(mean))))
    throw NumericError("paired differences have zero variance");
  return {mean / (sd / std::sqrt(n)), static_cast<int>(a.size()) - 1};
}

}  // namespace chain
