// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bip/errors.hpp"
#include "bip/ot.hpp"
#include "bip/rng.hpp"
#include "bip/transport_map.hpp"

namespace bip {

namespace {

// ---------------------------------------------------------------------------
// Forward/backward passes through one residual block with cached activations.

struct BlockCache {
  std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
  std::vector<Eigen::MatrixXd> act;   // act[0] = X, act[l+1] = layer l output
};

Eigen::MatrixXd block_forward(const MlpBlock& blk, const Eigen::MatrixXd& X,
                              BlockCache& cache) {
  const std::size_t L = blk.W.size();
  cache.pre.resize(L);
  cache.act.resize(L + 1);
  cache.act[0] = X;
  for (std::size_t l = 0; l < L; ++l) {
    cache.pre[l] = (blk.W[l] * cache.act[l]).colwise() + blk.b[l];
    if (l + 1 < L) {
      cache.act[l + 1] = cache.pre[l];
      double* d = cache.act[l + 1].data();
      for (Eigen::Index k = 0; k < cache.act[l + 1].size(); ++k) {
        if (d[k] < 0.0) d[k] *= blk.leaky_slope;
      }
    } else {
      cache.act[l + 1] = cache.pre[l];
    }
  }
  return X + cache.act[L];
}

struct BlockGrads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  void init_like(const MlpBlock& blk) {
    dW.clear();
    db.clear();
    for (const auto& w : blk.W) dW.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : blk.b) db.push_back(Eigen::VectorXd::Zero(b.size()));
  }
};

// Given dL/dY for Y = X + G(X), fills parameter gradients and returns dL/dX.
Eigen::MatrixXd block_backward(const MlpBlock& blk, const BlockCache& cache,
                               const Eigen::MatrixXd& dY, BlockGrads& grads) {
  const std::size_t L = blk.W.size();
  Eigen::MatrixXd da = dY;  // gradient wrt act[l+1], starting at the output
  for (std::size_t l = L; l-- > 0;) {
    Eigen::MatrixXd dh = std::move(da);
    if (l + 1 < L) {
      const double* p = cache.pre[l].data();
      double* d = dh.data();
      for (Eigen::Index k = 0; k < dh.size(); ++k) {
        if (p[k] < 0.0) d[k] *= blk.leaky_slope;
      }
    }
    grads.dW[l] = dh * cache.act[l].transpose();
    grads.db[l] = dh.rowwise().sum();
    da = blk.W[l].transpose() * dh;
  }
  return dY + da;  // identity path plus the MLP path
}

// Fixed Adam constants (the step size itself stays in TrainConfig::lr).
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Per-tensor optimizer state.  Plain SGD keeps no state (momentum 0 zeroes
// the first moment each step), heavy-ball uses the first moment as its
// velocity, and Adam uses both moments with the usual bias correction.
template <class T>
struct TensorOpt {
  T m, v;

  explicit TensorOpt(const T& like)
      : m(T::Zero(like.rows(), like.cols())),
        v(T::Zero(like.rows(), like.cols())) {}

  void apply(T& param, const T& grad, const TrainConfig& cfg, long t) {
    if (cfg.optimizer == Optimizer::adam) {
      m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
      v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
      const double scale = cfg.lr *
                           std::sqrt(1.0 - std::pow(kAdamBeta2, t)) /
                           (1.0 - std::pow(kAdamBeta1, t));
      param.array() -= scale * m.array() / (v.array().sqrt() + kAdamEps);
    } else {
      m = cfg.momentum * m - cfg.lr * grad;
      param += m;
    }
  }
};

// Optimizer state for one residual block, reset at the start of each stage.
struct BlockOpt {
  std::vector<TensorOpt<Eigen::MatrixXd>> W;
  std::vector<TensorOpt<Eigen::VectorXd>> b;
  long t = 0;

  explicit BlockOpt(const MlpBlock& blk) {
    for (const auto& w : blk.W) W.emplace_back(w);
    for (const auto& v : blk.b) b.emplace_back(v);
  }

  void step(MlpBlock& blk, const BlockGrads& grads, const TrainConfig& cfg) {
    ++t;
    for (std::size_t l = 0; l < blk.W.size(); ++l) {
      W[l].apply(blk.W[l], grads.dW[l], cfg, t);
      b[l].apply(blk.b[l], grads.db[l], cfg, t);
    }
  }
};

// Optimizer state for the affine lift trained alongside the first stage.
struct LiftOpt {
  TensorOpt<Eigen::MatrixXd> W;
  TensorOpt<Eigen::VectorXd> b;
  long t = 0;

  LiftOpt(const Eigen::MatrixXd& w, const Eigen::VectorXd& v) : W(w), b(v) {}

  void step(std::pair<Eigen::MatrixXd, Eigen::VectorXd>& lift,
            const Eigen::MatrixXd& gW, const Eigen::VectorXd& gb,
            const TrainConfig& cfg) {
    ++t;
    W.apply(lift.first, gW, cfg, t);
    b.apply(lift.second, gb, cfg, t);
  }
};

// ---------------------------------------------------------------------------

// Draws batches from a weighted cloud with replacement via inverse CDF.
class CloudSampler {
 public:
  explicit CloudSampler(const PointCloud& cloud) : cloud_(cloud) {
    cum_.resize(cloud.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      acc += cloud.w[i];
      cum_[i] = acc;
    }
    total_ = acc;
  }

  Eigen::MatrixXd batch(int size, Rng& rng) const {
    Eigen::MatrixXd out(cloud_.dim, size);
    for (int k = 0; k < size; ++k) {
      const double u = rng.uniform() * total_;
      const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
      const std::size_t i = std::min(
          static_cast<std::size_t>(it - cum_.begin()), cloud_.size() - 1);
      const auto p = cloud_.point(i);
      for (int d = 0; d < cloud_.dim; ++d) out(d, k) = p[d];
    }
    return out;
  }

 private:
  const PointCloud& cloud_;
  std::vector<double> cum_;
  double total_ = 0.0;
};

PointCloud cloud_from_batch(const Eigen::MatrixXd& X) {
  PointCloud c;
  c.dim = static_cast<int>(X.rows());
  c.pts.assign(X.data(), X.data() + X.size());
  c.w.assign(static_cast<std::size_t>(X.cols()),
             1.0 / static_cast<double>(X.cols()));
  return c;
}

// Pushes Z through the lift and the first `stage_count` stages.
Eigen::MatrixXd forward_prefix(const ResidualMapStack& map,
                               const Eigen::MatrixXd& Z,
                               std::size_t stage_count) {
  Eigen::MatrixXd x;
  if (map.lift.has_value()) {
    x = (map.lift->first * Z).colwise() + map.lift->second;
  } else {
    x = Z;
  }
  for (std::size_t s = 0; s < stage_count; ++s) {
    x += map.stages[s].residual(x);
  }
  return x;
}

double divergence_between(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                          const OtConfig& cfg) {
  const PointCloud a = cloud_from_batch(X);
  const PointCloud b = cloud_from_batch(Y);
  return sinkhorn_divergence(a, b, cfg).value;
}

}  // namespace

Optimizer parse_optimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw ConfigError("unknown optimizer: " + name + " (expected sgd or adam)");
}

std::string optimizer_name(Optimizer opt) {
  return opt == Optimizer::adam ? "adam" : "sgd";
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (cfg.batch_size < 2) {
    throw ConfigError("train config: batch_size must be >= 2");
  }
  if (!(cfg.lr > 0.0)) throw ConfigError("train config: lr must be positive");
  if (!(cfg.momentum >= 0.0) || cfg.momentum >= 1.0) {
    throw ConfigError("train config: momentum must lie in [0, 1)");
  }
  if (cfg.stage_count < 1) {
    throw ConfigError("train config: stage_count must be >= 1");
  }
  for (const int h : cfg.hidden) {
    if (h < 1) throw ConfigError("train config: hidden widths must be >= 1");
  }
  if (!(cfg.eps_start > 0.0) || !(cfg.eps_end > 0.0) ||
      cfg.eps_end > cfg.eps_start) {
    throw ConfigError(
        "train config: need eps_start >= eps_end > 0 for the schedule");
  }
  if (cfg.generator_update_period < 1) {
    throw ConfigError("train config: generator_update_period must be >= 1");
  }
  if (cfg.sinkhorn_max_iters < 1 || !(cfg.sinkhorn_tol > 0.0)) {
    throw ConfigError("train config: invalid divergence solver settings");
  }
  if (cfg.joint_finetune && cfg.finetune_epochs < 1) {
    throw ConfigError(
        "train config: joint_finetune requires finetune_epochs >= 1");
  }
  if (cfg.eval_size < 2) {
    throw ConfigError("train config: eval_size must be >= 2");
  }
}

TrainResult train(const PointCloud& reference, const PointCloud& target,
                  const TrainConfig& cfg) {
  validate_train_config(cfg);
  validate_cloud(reference);
  validate_cloud(target);

  TrainResult result;
  result.map = make_stack(reference.dim, target.dim, cfg.stage_count,
                          cfg.hidden, cfg.leaky_slope, cfg.seed);
  ResidualMapStack& map = result.map;

  const CloudSampler ref_sampler(reference);
  const CloudSampler tgt_sampler(target);

  // Fixed holdout pair used to score progress (and to roll back stages that
  // fail to improve).  Scored at the final schedule epsilon with a tighter
  // tolerance than the training steps.
  Rng eval_rng = Rng::derived(cfg.seed, 0x6576616c2d736574ULL);
  const int eval_n = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(cfg.eval_size),
      std::min(reference.size(), target.size())));
  const Eigen::MatrixXd eval_z = ref_sampler.batch(eval_n, eval_rng);
  const Eigen::MatrixXd eval_y = tgt_sampler.batch(eval_n, eval_rng);
  OtConfig eval_cfg;
  eval_cfg.ground_power = 2;
  eval_cfg.epsilon = cfg.eps_end;
  // The holdout is scored only once per stage, so it can afford the full
  // default iteration budget even when training steps run on a short leash.
  eval_cfg.max_iters = std::max(cfg.sinkhorn_max_iters, OtConfig{}.max_iters);
  eval_cfg.tolerance = std::min(cfg.sinkhorn_tol, 1e-5);

  const auto holdout_score = [&](std::size_t stages_active) {
    return divergence_between(forward_prefix(map, eval_z, stages_active),
                              eval_y, eval_cfg);
  };

  result.eval_initial = holdout_score(map.stages.size());
  double eval_prev = result.eval_initial;

  const int updates_per_stage =
      (cfg.epochs + cfg.generator_update_period - 1) /
      cfg.generator_update_period;

  OtConfig step_cfg;
  step_cfg.ground_power = 2;
  step_cfg.max_iters = cfg.sinkhorn_max_iters;
  step_cfg.tolerance = cfg.sinkhorn_tol;

  Rng rng = Rng::derived(cfg.seed, 0x747261696e2d7367ULL);
  BlockGrads grads;
  BlockCache cache;

  for (std::size_t stage = 0; stage < map.stages.size(); ++stage) {
    MlpBlock stage_backup = map.stages[stage];
    const auto lift_backup = map.lift;
    const bool trains_lift = stage == 0 && map.lift.has_value();
    BlockOpt opt(map.stages[stage]);
    std::optional<LiftOpt> lift_opt;
    if (trains_lift) lift_opt.emplace(map.lift->first, map.lift->second);

    // A stage whose optimization explodes (non-finite parameters, a batch
    // divergence the solver cannot handle) is rolled back the same way a
    // stage that fails its holdout check is, and training moves on.
    bool stage_failed = false;
    try {
    for (int step = 0; step < updates_per_stage; ++step) {
      // Geometric regularization schedule across the stage.
      const double t =
          updates_per_stage > 1
              ? static_cast<double>(step) / (updates_per_stage - 1)
              : 1.0;
      step_cfg.epsilon =
          cfg.eps_start * std::pow(cfg.eps_end / cfg.eps_start, t);

      const Eigen::MatrixXd Z = ref_sampler.batch(cfg.batch_size, rng);
      const Eigen::MatrixXd Y = tgt_sampler.batch(cfg.batch_size, rng);
      const Eigen::MatrixXd X0 = forward_prefix(map, Z, stage);
      const Eigen::MatrixXd X1 = block_forward(map.stages[stage], X0, cache);

      const SinkhornResult sr =
          sinkhorn_divergence(cloud_from_batch(X1), cloud_from_batch(Y),
                              step_cfg);
      if (!std::isfinite(sr.value)) {
        throw NumericError("training failure: non-finite divergence at stage " +
                           std::to_string(stage) + " step " +
                           std::to_string(step));
      }
      result.loss_history.push_back(sr.value);

      const Eigen::Map<const Eigen::MatrixXd> dX1(
          sr.grad_a.data(), map.output_dim, cfg.batch_size);
      grads.init_like(map.stages[stage]);
      const Eigen::MatrixXd dX0 =
          block_backward(map.stages[stage], cache, dX1, grads);
      opt.step(map.stages[stage], grads, cfg);
      if (trains_lift) {
        lift_opt->step(*map.lift, dX0 * Z.transpose(), dX0.rowwise().sum(),
                       cfg);
      }
      for (const auto& w : map.stages[stage].W) {
        if (!w.allFinite()) {
          throw NumericError("training failure: non-finite parameters at stage " +
                             std::to_string(stage));
        }
      }
    }
    } catch (const NumericError&) {
      stage_failed = true;
    }

    const double eval_after =
        stage_failed ? std::numeric_limits<double>::infinity()
                     : holdout_score(map.stages.size());
    if (!(eval_after <= eval_prev)) {
      // The stage made the holdout score worse; roll it back (the block
      // returns to its inert initialization, so the map is unchanged).
      map.stages[stage] = std::move(stage_backup);
      if (trains_lift) map.lift = lift_backup;
      result.reverted_stages.push_back(static_cast<int>(stage));
    } else {
      eval_prev = eval_after;
    }
  }

  if (cfg.joint_finetune) {
    const std::vector<MlpBlock> stages_backup = map.stages;
    const auto lift_backup = map.lift;
    const int steps = (cfg.finetune_epochs + cfg.generator_update_period - 1) /
                      cfg.generator_update_period;
    std::vector<BlockCache> caches(map.stages.size());
    std::vector<BlockGrads> all_grads(map.stages.size());
    std::vector<BlockOpt> all_opt;
    for (const auto& blk : map.stages) all_opt.emplace_back(blk);
    std::optional<LiftOpt> lift_opt;
    if (map.lift.has_value()) {
      lift_opt.emplace(map.lift->first, map.lift->second);
    }
    // The joint pass gets the same explosion handling as a sequential stage:
    // a non-finite batch aborts the pass and the rollback below restores the
    // sequential-phase parameters.
    bool pass_failed = false;
    try {
    for (int step = 0; step < steps; ++step) {
      step_cfg.epsilon = cfg.eps_end;
      const Eigen::MatrixXd Z = ref_sampler.batch(cfg.batch_size, rng);
      const Eigen::MatrixXd Y = tgt_sampler.batch(cfg.batch_size, rng);
      Eigen::MatrixXd x;
      if (map.lift.has_value()) {
        x = (map.lift->first * Z).colwise() + map.lift->second;
      } else {
        x = Z;
      }
      for (std::size_t s = 0; s < map.stages.size(); ++s) {
        x = block_forward(map.stages[s], x, caches[s]);
      }
      const SinkhornResult sr = sinkhorn_divergence(
          cloud_from_batch(x), cloud_from_batch(Y), step_cfg);
      if (!std::isfinite(sr.value)) {
        throw NumericError("training failure: non-finite divergence in joint pass");
      }
      result.loss_history.push_back(sr.value);
      Eigen::MatrixXd dx = Eigen::Map<const Eigen::MatrixXd>(
          sr.grad_a.data(), map.output_dim, cfg.batch_size);
      for (std::size_t s = map.stages.size(); s-- > 0;) {
        all_grads[s].init_like(map.stages[s]);
        dx = block_backward(map.stages[s], caches[s], dx, all_grads[s]);
      }
      for (std::size_t s = 0; s < map.stages.size(); ++s) {
        all_opt[s].step(map.stages[s], all_grads[s], cfg);
      }
      if (map.lift.has_value()) {
        lift_opt->step(*map.lift, dx * Z.transpose(), dx.rowwise().sum(), cfg);
      }
      for (const auto& w : map.stages.back().W) {
        if (!w.allFinite()) {
          throw NumericError("training failure: non-finite parameters in joint pass");
        }
      }
    }
    } catch (const NumericError&) {
      pass_failed = true;
    }
    const double eval_after =
        pass_failed ? std::numeric_limits<double>::infinity()
                    : holdout_score(map.stages.size());
    if (!(eval_after <= eval_prev)) {
      map.stages = stages_backup;
      map.lift = lift_backup;
      result.reverted_stages.push_back(-1);  // -1 marks the joint pass
    } else {
      eval_prev = eval_after;
    }
  }

  result.eval_final = eval_prev;
  return result;
}

}  // namespace bip
