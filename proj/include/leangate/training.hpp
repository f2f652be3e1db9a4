#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "leangate/errors.hpp"
#include "leangate/gate_regressor.hpp"
#include "leangate/rng.hpp"

namespace leangate {

struct TrainConfig {
  double delta = 0.1;          // Huber transition point
  int epochs = 20;
  int batch_size = 32;
  double lr_head = 3e-3;       // score token, attention, update and readout
  double lr_projection = 1e-3; // token projection
  double weight_decay = 1e-4;  // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double warmup_fraction = 0.25;  // share of total steps with linear warmup
  std::uint64_t seed = 0;
  int iterations = 4;  // K
  int stop_after = 0;  // stop once this many epochs are complete; 0 runs to `epochs`

  void validate() const {
    if (!(delta > 0.0)) throw ConfigError("train: delta must be > 0");
    if (iterations < 0) throw ConfigError("train: K must be >= 0");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (stop_after < 0) throw ConfigError("train: stop_after must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    if (!(lr_head >= 0.0 && lr_projection >= 0.0)) throw ConfigError("train: learning rates must be >= 0");
    if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) throw ConfigError("train: warmup fraction in [0,1]");
  }
};

/// AdamW moments plus progress counters; stored in checkpoints so training
/// can resume bit-identically.
struct OptimizerState {
  std::vector<float> m;
  std::vector<float> v;
  std::uint32_t step = 0;
  std::uint32_t epoch = 0;

  bool operator==(const OptimizerState&) const = default;
};

struct ErrorStats {
  double mae = 0.0;
  double rmse = 0.0;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  ErrorStats train;
  ErrorStats eval;
};

template <typename Scalar>
double predict_tokens(const GateRegressorT<Scalar>& model, const TrainingSample& s) {
  return forward(model, s.ref_token, s.cur_token).tau;
}

template <typename Scalar>
ErrorStats evaluate(const GateRegressorT<Scalar>& model, const std::vector<TrainingSample>& data) {
  ErrorStats st;
  if (data.empty()) return st;
  for (const auto& s : data) {
    const double e = predict_tokens(model, s) - s.target;
    st.mae += std::abs(e);
    st.rmse += e * e;
  }
  st.mae /= static_cast<double>(data.size());
  st.rmse = std::sqrt(st.rmse / static_cast<double>(data.size()));
  return st;
}

/// Per-feature mean and standard deviation over both tokens of every sample.
inline void fit_normalization(GateRegressor& model, const std::vector<TrainingSample>& data) {
  const auto dim = static_cast<std::size_t>(model.shape.descriptor_dim);
  std::vector<double> sum(dim, 0.0), sum2(dim, 0.0);
  double n = 0.0;
  for (const auto& s : data) {
    for (const auto* tok : {&s.ref_token, &s.cur_token}) {
      for (std::size_t k = 0; k < dim; ++k) {
        sum[k] += (*tok)[k];
        sum2[k] += (*tok)[k] * (*tok)[k];
      }
      n += 1.0;
    }
  }
  for (std::size_t k = 0; k < dim; ++k) {
    const double mean = sum[k] / n;
    const double var = std::max(0.0, sum2[k] / n - mean * mean);
    model.norm_mean[k] = static_cast<float>(mean);
    model.norm_std[k] = static_cast<float>(std::sqrt(var) + 1e-6);
  }
}

inline std::size_t steps_per_epoch(std::size_t n, int batch_size) {
  return (n + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size);
}

/// Learning-rate multiplier: linear warmup over the first warmup_fraction of
/// all steps, constant afterwards.
inline double warmup_scale(std::uint32_t step, std::size_t total_steps, double warmup_fraction) {
  const double warm = std::floor(warmup_fraction * static_cast<double>(total_steps));
  if (warm < 1.0) return 1.0;
  return std::min(1.0, (static_cast<double>(step) + 1.0) / warm);
}

/// One AdamW update. Parameters and moments are kept in float; the update
/// arithmetic runs in double.
inline void adamw_step(GateRegressor& model, OptimizerState& opt, const std::vector<double>& grad,
                       const TrainConfig& cfg, double lr_scale) {
  const auto blocks = parameter_layout(model.shape);
  opt.step += 1;
  const double t = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& b : blocks) {
    const double lr = (b.token_projection() ? cfg.lr_projection : cfg.lr_head) * lr_scale;
    for (std::size_t k = b.offset; k < b.offset + b.count(); ++k) {
      const double g = grad[k];
      const double m = cfg.beta1 * opt.m[k] + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * opt.v[k] + (1.0 - cfg.beta2) * g * g;
      opt.m[k] = static_cast<float>(m);
      opt.v[k] = static_cast<float>(v);
      const double mhat = static_cast<double>(opt.m[k]) / bc1;
      const double vhat = static_cast<double>(opt.v[k]) / bc2;
      double p = model.params[k];
      p -= lr * cfg.weight_decay * p;
      p -= lr * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
      model.params[k] = static_cast<float>(p);
    }
  }
}

struct TrainResult {
  GateRegressor model;
  OptimizerState optimizer;
  std::vector<EpochMetrics> history;
};

inline OptimizerState fresh_optimizer(const GateRegressor& model) {
  OptimizerState opt;
  opt.m.assign(model.params.size(), 0.0f);
  opt.v.assign(model.params.size(), 0.0f);
  return opt;
}

/// Minimizes the mean Huber loss of tau_pred - tau_gt with AdamW from
/// (model, optimizer) until cfg.epochs epochs have completed in total. A
/// resumed run continues at optimizer.epoch with the same per-epoch shuffles,
/// so it matches an uninterrupted run bit for bit.
inline TrainResult train(GateRegressor model, OptimizerState optimizer, const std::vector<TrainingSample>& train_set,
                         const std::vector<TrainingSample>& eval_set, const TrainConfig& cfg,
                         const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty dataset");
  if (model.shape.iterations != cfg.iterations) model.shape.iterations = cfg.iterations;
  if (optimizer.m.size() != model.params.size()) optimizer = fresh_optimizer(model);
  const std::size_t per_epoch = steps_per_epoch(train_set.size(), cfg.batch_size);
  const std::size_t total_steps = per_epoch * static_cast<std::size_t>(cfg.epochs);

  TrainResult res{std::move(model), std::move(optimizer), {}};
  std::vector<std::size_t> order(train_set.size());
  std::vector<double> grad;
  std::vector<const TrainingSample*> batch;
  const int last = cfg.stop_after > 0 ? std::min(cfg.epochs, cfg.stop_after) : cfg.epochs;
  for (int epoch = static_cast<int>(res.optimizer.epoch); epoch < last; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    Rng rng(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t k = start; k < stop; ++k) batch.push_back(&train_set[order[k]]);
      const double loss = loss_and_gradient(res.model, batch, cfg.delta, &grad);
      loss_sum += loss * static_cast<double>(batch.size());
      adamw_step(res.model, res.optimizer, grad, cfg,
                 warmup_scale(res.optimizer.step, total_steps, cfg.warmup_fraction));
    }
    res.optimizer.epoch = static_cast<std::uint32_t>(epoch + 1);
    EpochMetrics em;
    em.epoch = epoch + 1;
    em.train_loss = loss_sum / static_cast<double>(train_set.size());
    em.train = evaluate(res.model, train_set);
    em.eval = evaluate(res.model, eval_set);
    res.history.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  return res;
}

/// Fresh model (seeded init, normalization fitted on the training split)
/// trained from scratch.
inline TrainResult train_from_scratch(const std::vector<TrainingSample>& train_set,
                                      const std::vector<TrainingSample>& eval_set, const TrainConfig& cfg,
                                      ModelShape shape = {},
                                      const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  if (train_set.empty()) throw DataError("train: empty dataset");
  shape.iterations = cfg.iterations;
  shape.descriptor_dim = static_cast<int>(train_set.front().ref_token.size());
  GateRegressor model = GateRegressor::initialized(shape, cfg.seed);
  fit_normalization(model, train_set);
  OptimizerState opt = fresh_optimizer(model);
  return train(std::move(model), std::move(opt), train_set, eval_set, cfg, on_epoch);
}

}  // namespace leangate
