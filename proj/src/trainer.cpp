#include "chain/trainer.hpp"

#include "chain/errors.hpp"
#include "chain/optim.hpp"
#include "chain/rng.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <variant>

namespace chain {
namespace {

class MainStepper {
 public:
  explicit MainStepper(const TrainConfig& cfg) {
    if (cfg.main_optimizer == MainOptimizer::kAdam)
      opt_.emplace<MatrixAdam>(AdamParams{cfg.lr, 0.9, 0.999, 1e-8});
    else
      opt_.emplace<MatrixMomentumSgd>(cfg.lr, 0.9);
  }

  void step(Matrix& w, const Matrix& g) {
    std::visit([&](auto& o) { o.step(w, g); }, opt_);
  }

 private:
  std::variant<MatrixAdam, MatrixMomentumSgd> opt_{
      std::in_place_type<MatrixAdam>, AdamParams{}};
};

TrainOutcome train_loop(const PoolState& pool, const FeatureDataset& ds,
                        const TrainConfig& cfg, double lambda0,
                        bool curriculum) {
  cfg.validate();
  if (pool.labeled.empty()) throw ConfigError("training needs labeled data");
  if (pool.validation.empty())
    throw ConfigError("training needs a validation set");

  const LabeledSet train = LabeledSet::from(ds, pool.labeled);
  const LabeledSet val = LabeledSet::from(ds, pool.validation);
  const Index n = train.size();
  const Index bs = cfg.batch_size(n);
  const int t2 = cfg.bilevel.t2;

  ModelParams beta = ModelParams::zeros(ds.num_classes, ds.dim());
  double lambda = lambda0;
  MainStepper stepper(cfg);
  Rng batch_rng = make_rng(cfg.seed, Stream::kTrainBatches);

  TrainOutcome out;
  out.params = beta;
  out.best_val_loss = std::numeric_limits<double>::infinity();
  if (!curriculum) out.lambda_traj.points.push_back({0, lambda});
  int since_best = 0;

  for (int t = 1; t <= cfg.total_steps; ++t) {
    if (curriculum && t % t2 == 0) {
      lambda = solve_lambda(beta, lambda, cfg.bilevel, train, val, bs,
                            derive_seed(cfg.seed, Stream::kBilevelBatches,
                                        static_cast<std::uint64_t>(t)))
                   .lambda;
      out.lambda_traj.points.push_back({t, lambda});
    }

    const LabeledSet batch =
        train.subset(sample_without_replacement(n, bs, batch_rng));
    const GradPair g = grad(beta, batch.x, batch.y);
    stepper.step(beta.weights, g.combined(lambda));
    if (!beta.weights.allFinite()) {
      std::ostringstream os;
      os.precision(17);
      os << "non-finite weights after training step " << t
         << " (lambda=" << lambda << ")";
      throw NumericError(os.str());
    }
    out.steps_run = t;

    if (t % t2 == 0 || t == cfg.total_steps) {
      const double v = loss(beta, val.x, val.y, 0.0).ce;
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite validation loss at step " << t;
        throw NumericError(os.str());
      }
      if (v < out.best_val_loss) {
        out.best_val_loss = v;
        out.params = beta;
        since_best = 0;
      } else if (++since_best >= cfg.early_stop_patience) {
        out.stopped_early = t < cfg.total_steps;
        break;
      }
    }
  }
  out.lambda_traj.final_lambda = lambda;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0))
    throw ConfigError("batch_fraction must lie in (0, 1]");
  if (early_stop_patience < 1)
    throw ConfigError("early_stop_patience must be >= 1");
  bilevel.validate();
}

Index TrainConfig::batch_size(Index n) const {
  const auto b = static_cast<Index>(std::floor(batch_fraction * static_cast<double>(n)));
  return std::max<Index>(1, std::min(b, n));
}

TrainOutcome train_chain(const PoolState& pool, const FeatureDataset& ds,
                         const TrainConfig& cfg) {
  return train_loop(pool, ds, cfg, cfg.bilevel.lambda_init, true);
}

TrainOutcome train_fixed_lambda(const PoolState& pool, const FeatureDataset& ds,
                                const TrainConfig& cfg, double lambda) {
  return train_loop(pool, ds, cfg, lambda, false);
}

TrainOutcome train_fbr_bo(const PoolState& pool, const FeatureDataset& ds,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (pool.labeled.empty()) throw ConfigError("training needs labeled data");
  if (pool.validation.empty())
    throw ConfigError("training needs a validation set");
  const LabeledSet train = LabeledSet::from(ds, pool.labeled);
  const LabeledSet val = LabeledSet::from(ds, pool.validation);
  const double lambda =
      solve_lambda(ModelParams::zeros(ds.num_classes, ds.dim()),
                   cfg.bilevel.lambda_init, cfg.bilevel, train, val,
                   cfg.batch_size(train.size()),
                   derive_seed(cfg.seed, Stream::kBilevelBatches, 0))
          .lambda;
  return train_fixed_lambda(pool, ds, cfg, lambda);
}

GridSearchOutcome train_fbr_gs(const PoolState& pool, const FeatureDataset& ds,
                               const TrainConfig& cfg,
                               const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  GridSearchOutcome best;
  std::optional<std::size_t> best_arm;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // Every arm replays the same minibatch stream, so arms differ only in
    // lambda.
    TrainOutcome o = train_fixed_lambda(pool, ds, cfg, grid[k]);
    best.arm_val_losses.push_back(o.best_val_loss);
    const bool better =
        !best_arm || o.best_val_loss < best.outcome.best_val_loss ||
        (o.best_val_loss == best.outcome.best_val_loss &&
         grid[k] < best.chosen_lambda);
    if (better) {
      best_arm = k;
      best.chosen_lambda = grid[k];
      best.outcome = std::move(o);
    }
  }
  return best;
}

}  // namespace chain
