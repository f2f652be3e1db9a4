#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "leangate/binary_io.hpp"
#include "leangate/descriptor.hpp"
#include "leangate/errors.hpp"
#include "leangate/rng.hpp"

namespace leangate {

inline constexpr int kLatentDim = 8;

struct ModelShape {
  int descriptor_dim = DescriptorLayout::kDim;
  int d_model = 16;
  int iterations = 4;  // K

  bool operator==(const ModelShape&) const = default;
};

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t count() const { return static_cast<std::size_t>(rows) * cols; }
  bool token_projection() const { return name.rfind("proj.", 0) == 0; }
};

/// Trainable parameter blocks in storage order.
inline std::vector<ParamBlock> parameter_layout(const ModelShape& s) {
  const int d = s.d_model;
  std::vector<ParamBlock> blocks = {
      {"proj.weight", d, s.descriptor_dim}, {"proj.bias", d, 1},
      {"score.weight", d, kLatentDim},      {"score.bias", d, 1},
      {"attn.q.weight", d, d},              {"attn.q.bias", d, 1},
      {"attn.k.weight", d, d},              {"attn.k.bias", d, 1},
      {"attn.v.weight", d, d},              {"attn.v.bias", d, 1},
      {"attn.out.weight", d, d},            {"attn.out.bias", d, 1},
      {"update.weight", kLatentDim, d},     {"update.bias", kLatentDim, 1},
      {"readout.weight", 1, kLatentDim},    {"readout.bias", 1, 1},
  };
  std::size_t offset = 0;
  for (auto& b : blocks) {
    b.offset = offset;
    offset += b.count();
  }
  return blocks;
}

inline std::size_t parameter_count(const ModelShape& s) {
  const auto blocks = parameter_layout(s);
  return blocks.back().offset + blocks.back().count();
}

/// Distilled gate scorer: shared token projection, latent-conditioned score
/// token, single-head attention over {score, reference, current} and an
/// additive update of an 8-d latent, read out through a sigmoid.
/// Descriptor standardization statistics travel with the parameters.
template <typename Scalar>
struct GateRegressorT {
  ModelShape shape;
  std::vector<Scalar> params;
  std::vector<Scalar> norm_mean;
  std::vector<Scalar> norm_std;

  GateRegressorT() : GateRegressorT(ModelShape{}) {}
  explicit GateRegressorT(const ModelShape& s)
      : shape(s),
        params(parameter_count(s), Scalar(0)),
        norm_mean(static_cast<std::size_t>(s.descriptor_dim), Scalar(0)),
        norm_std(static_cast<std::size_t>(s.descriptor_dim), Scalar(1)) {
    if (s.descriptor_dim < 1 || s.d_model < 1) throw ConfigError("model: dimensions must be positive");
    if (s.iterations < 0) throw ConfigError("model: K must be >= 0");
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every block.
  static GateRegressorT initialized(const ModelShape& s, std::uint64_t seed) {
    GateRegressorT m(s);
    Rng rng(derive_seed(seed, "model-init"));
    for (const auto& b : parameter_layout(s)) {
      const bool bias = b.cols == 1 && b.name.find("bias") != std::string::npos;
      int fan_in = b.cols;
      if (bias) {
        // Fan-in of the matching weight matrix.
        const std::string wname = b.name.substr(0, b.name.size() - 4) + "weight";
        for (const auto& w : parameter_layout(s)) {
          if (w.name == wname) fan_in = w.cols;
        }
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (std::size_t k = 0; k < b.count(); ++k) {
        m.params[b.offset + k] = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    }
    return m;
  }

  template <typename Other>
  GateRegressorT<Other> cast() const {
    GateRegressorT<Other> out(shape);
    std::transform(params.begin(), params.end(), out.params.begin(), [](Scalar v) { return static_cast<Other>(v); });
    std::transform(norm_mean.begin(), norm_mean.end(), out.norm_mean.begin(), [](Scalar v) { return static_cast<Other>(v); });
    std::transform(norm_std.begin(), norm_std.end(), out.norm_std.begin(), [](Scalar v) { return static_cast<Other>(v); });
    return out;
  }

  bool operator==(const GateRegressorT&) const = default;
};

using GateRegressor = GateRegressorT<float>;

namespace detail {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

// Double-precision unpacked weights (also used as the gradient container).
struct Weights {
  MatX proj_w, score_w, q_w, k_w, v_w, o_w, upd_w, read_w;
  VecX proj_b, score_b, q_b, k_b, v_b, o_b, upd_b, read_b;

  explicit Weights(const ModelShape& s) {
    const int d = s.d_model;
    proj_w = MatX::Zero(d, s.descriptor_dim);
    score_w = MatX::Zero(d, kLatentDim);
    q_w = k_w = v_w = o_w = MatX::Zero(d, d);
    upd_w = MatX::Zero(kLatentDim, d);
    read_w = MatX::Zero(1, kLatentDim);
    proj_b = score_b = q_b = k_b = v_b = o_b = VecX::Zero(d);
    upd_b = VecX::Zero(kLatentDim);
    read_b = VecX::Zero(1);
  }

  // Visits blocks in parameter_layout order.
  template <typename F>
  void each(F&& f) {
    f(proj_w); f(proj_b); f(score_w); f(score_b); f(q_w); f(q_b); f(k_w); f(k_b);
    f(v_w); f(v_b); f(o_w); f(o_b); f(upd_w); f(upd_b); f(read_w); f(read_b);
  }

  template <typename Scalar>
  static Weights unpack(const GateRegressorT<Scalar>& m) {
    Weights w(m.shape);
    std::size_t off = 0;
    w.each([&](auto& block) {
      // Row-major storage.
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.cols(); ++c) block(r, c) = static_cast<double>(m.params[off++]);
      }
    });
    return w;
  }

  std::vector<double> flatten() {
    std::vector<double> out;
    each([&](auto& block) {
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.cols(); ++c) out.push_back(block(r, c));
      }
    });
    return out;
  }
};

template <typename Scalar>
VecX normalize_token(const GateRegressorT<Scalar>& m, const std::vector<double>& token) {
  VecX x(m.shape.descriptor_dim);
  for (int k = 0; k < m.shape.descriptor_dim; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    x[k] = (token[kk] - static_cast<double>(m.norm_mean[kk])) / static_cast<double>(m.norm_std[kk]);
  }
  return x;
}

// Everything the backward pass needs from one refinement step.
struct StepCache {
  VecX h_prev, s, q, o, y, g, delta;
  Eigen::Vector3d a;
  MatX keys, values;  // d x 3
};

struct SampleCache {
  VecX x_ref, x_cur, e_ref, e_cur, h_final;
  std::vector<StepCache> steps;
  double tau = 0.5;
};

inline SampleCache forward_cached(const Weights& w, const VecX& x_ref, const VecX& x_cur, int K) {
  const int d = static_cast<int>(w.proj_b.size());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  SampleCache c;
  c.x_ref = x_ref;
  c.x_cur = x_cur;
  c.e_ref = (w.proj_w * x_ref + w.proj_b).array().tanh().matrix();
  c.e_cur = (w.proj_w * x_cur + w.proj_b).array().tanh().matrix();
  VecX h = VecX::Zero(kLatentDim);
  for (int t = 0; t < K; ++t) {
    StepCache st;
    st.h_prev = h;
    st.s = w.score_w * h + w.score_b;
    MatX tokens(d, 3);
    tokens.col(0) = st.s;
    tokens.col(1) = c.e_ref;
    tokens.col(2) = c.e_cur;
    st.q = w.q_w * st.s + w.q_b;
    st.keys = (w.k_w * tokens).colwise() + w.k_b;
    st.values = (w.v_w * tokens).colwise() + w.v_b;
    Eigen::Vector3d logits = (st.keys.transpose() * st.q) * inv_sqrt_d;
    logits.array() -= logits.maxCoeff();
    st.a = logits.array().exp();
    st.a /= st.a.sum();
    st.o = st.values * st.a;
    st.y = st.s + w.o_w * st.o + w.o_b;
    st.g = st.y.array().tanh().matrix();
    st.delta = w.upd_w * st.g + w.upd_b;
    h = h + st.delta;
    c.steps.push_back(std::move(st));
  }
  c.h_final = h;
  const double z = (w.read_w * h)(0) + w.read_b(0);
  c.tau = 1.0 / (1.0 + std::exp(-z));
  return c;
}

// Accumulates d(loss)/d(params) into `gw` given d(loss)/d(tau).
inline void backward(const Weights& w, const SampleCache& c, double dtau, Weights& gw) {
  const int d = static_cast<int>(w.proj_b.size());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double dz = dtau * c.tau * (1.0 - c.tau);
  gw.read_w += dz * c.h_final.transpose();
  gw.read_b(0) += dz;
  VecX dh = dz * w.read_w.transpose();
  VecX de_ref = VecX::Zero(d);
  VecX de_cur = VecX::Zero(d);
  for (auto it = c.steps.rbegin(); it != c.steps.rend(); ++it) {
    const StepCache& st = *it;
    // h_t = h_{t-1} + U g + b_u
    gw.upd_w += dh * st.g.transpose();
    gw.upd_b += dh;
    const VecX dg = w.upd_w.transpose() * dh;
    const VecX dy = (dg.array() * (1.0 - st.g.array().square())).matrix();
    // y = s + W_o o + b_o
    VecX ds = dy;
    gw.o_w += dy * st.o.transpose();
    gw.o_b += dy;
    const VecX dout = w.o_w.transpose() * dy;
    // o = V a
    const Eigen::Vector3d da = st.values.transpose() * dout;
    const MatX dvalues = dout * st.a.transpose();
    const double mean_da = st.a.dot(da);
    const Eigen::Vector3d dlogit = (st.a.array() * (da.array() - mean_da)).matrix();
    // logits = K^T q / sqrt(d)
    const VecX dq = (st.keys * dlogit) * inv_sqrt_d;
    const MatX dkeys = (st.q * dlogit.transpose()) * inv_sqrt_d;
    gw.q_w += dq * st.s.transpose();
    gw.q_b += dq;
    ds += w.q_w.transpose() * dq;
    MatX tokens(d, 3);
    tokens.col(0) = st.s;
    tokens.col(1) = c.e_ref;
    tokens.col(2) = c.e_cur;
    gw.k_w += dkeys * tokens.transpose();
    gw.k_b += dkeys.rowwise().sum();
    gw.v_w += dvalues * tokens.transpose();
    gw.v_b += dvalues.rowwise().sum();
    const MatX dtokens = w.k_w.transpose() * dkeys + w.v_w.transpose() * dvalues;
    ds += dtokens.col(0);
    de_ref += dtokens.col(1);
    de_cur += dtokens.col(2);
    // s = W_s h_{t-1} + b_s
    gw.score_w += ds * st.h_prev.transpose();
    gw.score_b += ds;
    dh = dh + w.score_w.transpose() * ds;
  }
  const VecX du_ref = (de_ref.array() * (1.0 - c.e_ref.array().square())).matrix();
  const VecX du_cur = (de_cur.array() * (1.0 - c.e_cur.array().square())).matrix();
  gw.proj_w += du_ref * c.x_ref.transpose() + du_cur * c.x_cur.transpose();
  gw.proj_b += du_ref + du_cur;
}

}  // namespace detail

struct ForwardResult {
  double tau = 0.5;
  std::vector<std::vector<double>> latents;  // h^(0..K)
  std::vector<std::vector<double>> updates;  // delta h^(1..K)
};

/// Runs K refinement steps from a zero latent and returns tau in (0,1).
template <typename Scalar>
ForwardResult forward(const GateRegressorT<Scalar>& model, const std::vector<double>& ref_token,
                      const std::vector<double>& cur_token, std::optional<int> iterations = std::nullopt) {
  const auto dim = static_cast<std::size_t>(model.shape.descriptor_dim);
  if (ref_token.size() != dim || cur_token.size() != dim) {
    throw DataError("forward: token dimension mismatch (expected " + std::to_string(dim) + ")");
  }
  const int K = iterations.value_or(model.shape.iterations);
  if (K < 0) throw ConfigError("forward: K must be >= 0");
  const auto w = detail::Weights::unpack(model);
  const auto c = detail::forward_cached(w, detail::normalize_token(model, ref_token),
                                        detail::normalize_token(model, cur_token), K);
  ForwardResult out;
  out.tau = c.tau;
  out.latents.emplace_back(kLatentDim, 0.0);
  for (std::size_t t = 0; t < c.steps.size(); ++t) {
    const detail::VecX& h_next = t + 1 < c.steps.size() ? c.steps[t + 1].h_prev : c.h_final;
    const detail::VecX& delta = c.steps[t].delta;
    out.latents.emplace_back(h_next.data(), h_next.data() + h_next.size());
    out.updates.emplace_back(delta.data(), delta.data() + delta.size());
  }
  return out;
}

/// Huber penalty: a^2/2 inside [-delta, delta], linear outside.
inline double huber(double a, double delta) {
  const double m = std::abs(a);
  return m <= delta ? 0.5 * a * a : delta * (m - 0.5 * delta);
}

inline double huber_derivative(double a, double delta) {
  if (std::abs(a) <= delta) return a;
  return a > 0.0 ? delta : -delta;
}

struct TrainingSample {
  std::vector<double> ref_token;
  std::vector<double> cur_token;
  double target = 0.0;
};

/// Mean Huber loss of (tau_pred - target) over `batch`; fills `grad` (same
/// layout as model.params) when provided.
template <typename Scalar>
double loss_and_gradient(const GateRegressorT<Scalar>& model, const std::vector<const TrainingSample*>& batch,
                         double delta, std::vector<double>* grad = nullptr) {
  if (batch.empty()) throw DataError("loss: empty batch");
  const auto w = detail::Weights::unpack(model);
  detail::Weights gw(model.shape);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const TrainingSample* s : batch) {
    const auto c = detail::forward_cached(w, detail::normalize_token(model, s->ref_token),
                                          detail::normalize_token(model, s->cur_token), model.shape.iterations);
    const double a = c.tau - s->target;
    loss += huber(a, delta) * inv_n;
    if (grad) detail::backward(w, c, huber_derivative(a, delta) * inv_n, gw);
  }
  if (grad) *grad = gw.flatten();
  return loss;
}

template <typename Scalar>
double loss_and_gradient(const GateRegressorT<Scalar>& model, const std::vector<TrainingSample>& batch,
                         double delta, std::vector<double>* grad = nullptr) {
  std::vector<const TrainingSample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  return loss_and_gradient(model, ptrs, delta, grad);
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_abs_gradient = 0.0;
  std::size_t worst_index = 0;
};

/// Central finite differences against the analytic gradient for every
/// parameter. Relative error is |a - n| / max(|a| + |n|, floor).
template <typename Scalar>
GradCheckResult grad_check(const GateRegressorT<Scalar>& model, const std::vector<TrainingSample>& batch,
                           double delta, double epsilon, double floor = 1e-6) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw ConfigError("grad_check: epsilon must lie in [1e-7, 1e-3]");
  auto probe = model.template cast<double>();
  std::vector<double> analytic;
  loss_and_gradient(probe, batch, delta, &analytic);
  GradCheckResult res;
  for (std::size_t k = 0; k < probe.params.size(); ++k) {
    const double saved = probe.params[k];
    probe.params[k] = saved + epsilon;
    const double lp = loss_and_gradient(probe, batch, delta);
    probe.params[k] = saved - epsilon;
    const double lm = loss_and_gradient(probe, batch, delta);
    probe.params[k] = saved;
    const double numeric = (lp - lm) / (2.0 * epsilon);
    const double rel = std::abs(analytic[k] - numeric) / std::max(std::abs(analytic[k]) + std::abs(numeric), floor);
    res.max_abs_gradient = std::max(res.max_abs_gradient, std::abs(analytic[k]));
    if (rel > res.max_relative_error) {
      res.max_relative_error = rel;
      res.worst_index = k;
    }
  }
  return res;
}

}  // namespace leangate
