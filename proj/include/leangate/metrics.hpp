#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/SVD>

#include "leangate/errors.hpp"
#include "leangate/gating.hpp"
#include "leangate/geometry.hpp"
#include "leangate/trajectory.hpp"

namespace leangate {

// Trajectory alignment and ATE.

enum class AlignMode { sim3, se3, none };

struct AlignConfig {
  AlignMode mode = AlignMode::sim3;
  double max_dt = 0.02;  // timestamp association window, seconds
};

/// Closed-form least-squares similarity mapping `src` onto `dst` (paired
/// points). With `with_scale` false the scale is fixed to 1.
inline Sim3Transform umeyama(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, bool with_scale = true) {
  if (src.size() != dst.size()) throw DataError("umeyama: point lists differ in length");
  if (src.size() < 3) throw DataError("insufficient overlap");
  const double n = static_cast<double>(src.size());
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    mu_s += src[k];
    mu_d += dst[k];
  }
  mu_s /= n;
  mu_d /= n;
  Mat3 cov = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    const Vec3 a = src[k] - mu_s;
    cov += (dst[k] - mu_d) * a.transpose();
    var_s += a.squaredNorm();
  }
  cov /= n;
  var_s /= n;
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(var_s > 0.0) || !(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) throw DataError("degenerate geometry");
  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;
  const Mat3 R = svd.matrixU() * S * svd.matrixV().transpose();
  const double scale = with_scale ? (sv.asDiagonal() * S).trace() / var_s : 1.0;
  const Vec3 t = mu_d - scale * R * mu_s;
  return Sim3Transform(scale, Quat(R), t);
}

/// Associates by timestamp and fits the similarity taking est positions onto
/// gt positions.
inline Sim3Transform umeyama_sim3(const Trajectory& est, const Trajectory& gt, const AlignConfig& cfg = {}) {
  const auto matches = associate(est, gt, cfg.max_dt);
  if (matches.size() < 3) throw DataError("insufficient overlap");
  std::vector<Vec3> src, dst;
  for (const auto& [i, j] : matches) {
    src.push_back(est[i].pose.translation());
    dst.push_back(gt[j].pose.translation());
  }
  return umeyama(src, dst, cfg.mode != AlignMode::se3);
}

struct AteReport {
  double rmse_cm = 0.0;
  double mean_cm = 0.0;
  double max_cm = 0.0;
  std::size_t n_matched = 0;
  Sim3Transform sim3;
};

inline AteReport ate(const Trajectory& est, const Trajectory& gt, const AlignConfig& cfg = {}) {
  const auto matches = associate(est, gt, cfg.max_dt);
  if (matches.empty() || (cfg.mode != AlignMode::none && matches.size() < 3)) throw DataError("insufficient overlap");
  AteReport rep;
  if (cfg.mode != AlignMode::none) rep.sim3 = umeyama_sim3(est, gt, cfg);
  double sum2 = 0.0, sum = 0.0;
  for (const auto& [i, j] : matches) {
    const double e = (rep.sim3.apply(est[i].pose.translation()) - gt[j].pose.translation()).norm() * 100.0;
    sum2 += e * e;
    sum += e;
    rep.max_cm = std::max(rep.max_cm, e);
  }
  rep.n_matched = matches.size();
  rep.rmse_cm = std::sqrt(sum2 / static_cast<double>(matches.size()));
  rep.mean_cm = sum / static_cast<double>(matches.size());
  return rep;
}

// Exact nearest-neighbour search.

inline double brute_force_nn_distance(const std::vector<Vec3>& cloud, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : cloud) best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

/// Median-split kd-tree with exact nearest-neighbour queries.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw DataError("kd-tree: empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    axis_.assign(points_.size(), 0);
    build(0, points_.size());
  }

  std::size_t size() const { return points_.size(); }

  /// Euclidean distance from q to the nearest stored point.
  double nearest_distance(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(0, points_.size(), q, best);
    return std::sqrt(best);
  }

 private:
  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= 1) return;
    Vec3 mn = points_[order_[lo]], mx = mn;
    for (std::size_t k = lo; k < hi; ++k) {
      mn = mn.cwiseMin(points_[order_[k]]);
      mx = mx.cwiseMax(points_[order_[k]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::size_t a, std::size_t b) { return points_[a](axis) < points_[b](axis); });
    axis_[mid] = static_cast<std::uint8_t>(axis);
    build(lo, mid);
    build(mid + 1, hi);
  }

  void search(std::size_t lo, std::size_t hi, const Vec3& q, double& best) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Vec3& p = points_[order_[mid]];
    best = std::min(best, (p - q).squaredNorm());
    if (hi - lo == 1) return;
    const int axis = axis_[mid];
    const double diff = q(axis) - p(axis);
    const bool left_first = diff < 0.0;
    if (left_first) search(lo, mid, q, best);
    else search(mid + 1, hi, q, best);
    if (diff * diff <= best) {
      if (left_first) search(mid + 1, hi, q, best);
      else search(lo, mid, q, best);
    }
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<std::uint8_t> axis_;
};

// Reconstruction quality.

struct ReconReport {
  double acc_m = 0.0;
  double comp_m = 0.0;
  double chamfer_m = 0.0;
  double f2 = 0.0;
  double f5 = 0.0;
};

struct ReconThresholds {
  double near = 0.02;
  double far = 0.05;
};

inline double f_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Nearest-neighbour distances from every point of `from` to the set `to`.
inline std::vector<double> nn_distances(const std::vector<Vec3>& from, const KdTree& to) {
  std::vector<double> d;
  d.reserve(from.size());
  for (const auto& p : from) d.push_back(to.nearest_distance(p));
  return d;
}

inline ReconReport recon_from_distances(const std::vector<double>& pred_to_ref, const std::vector<double>& ref_to_pred,
                                        const ReconThresholds& thr = {}) {
  if (pred_to_ref.empty() || ref_to_pred.empty()) throw DataError("recon: empty point set");
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const auto within = [](const std::vector<double>& v, double d) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [d](double x) { return x <= d; })) /
           static_cast<double>(v.size());
  };
  ReconReport r;
  r.acc_m = mean(pred_to_ref);
  r.comp_m = mean(ref_to_pred);
  r.chamfer_m = 0.5 * (r.acc_m + r.comp_m);
  r.f2 = f_score(within(pred_to_ref, thr.near), within(ref_to_pred, thr.near));
  r.f5 = f_score(within(pred_to_ref, thr.far), within(ref_to_pred, thr.far));
  return r;
}

inline ReconReport recon_metrics(const std::vector<Vec3>& pred, const std::vector<Vec3>& ref,
                                 const ReconThresholds& thr = {}) {
  if (pred.empty() || ref.empty()) throw DataError("recon: empty point set");
  return recon_from_distances(nn_distances(pred, KdTree(ref)), nn_distances(ref, KdTree(pred)), thr);
}

// Compute cost accounting in TFLOPs.

struct CostModel {
  double c_gate = 0.0;     // per frame seen by the learned gate
  double c_track = 0.0;    // per kept frame, tracker encoder/decoder
  double c_backend = 0.0;  // per kept frame, backend

  void validate() const {
    if (!(c_gate >= 0.0 && c_track >= 0.0 && c_backend >= 0.0)) throw ConfigError("cost: constants must be >= 0");
  }
};

struct CostBreakdown {
  double gate_tflops = 0.0;
  double slam_tflops = 0.0;
  double total_tflops = 0.0;
};

/// Gate cost is charged on every frame of a student_gate run only; SLAM cost
/// on every kept frame.
inline CostBreakdown account_cost(const std::vector<GateDecision>& decisions, const CostModel& model) {
  model.validate();
  std::size_t student = 0, kept = 0;
  for (const auto& d : decisions) {
    student += d.policy == "student_gate" ? 1 : 0;
    kept += d.kept ? 1 : 0;
  }
  CostBreakdown c;
  c.gate_tflops = static_cast<double>(student) * model.c_gate;
  c.slam_tflops = static_cast<double>(kept) * (model.c_track + model.c_backend);
  c.total_tflops = c.gate_tflops + c.slam_tflops;
  return c;
}

/// Reference run totals used to back-solve per-frame constants.
struct CostCalibration {
  double gated_select_tflops = 532.05;
  double gated_slam_tflops = 461.41;
  double dense_total_tflops = 6698.55;
  double downsample = 15.58;
  std::size_t gated_kept = 427;
  double track_share = 0.8;  // tracker share of per-kept-frame SLAM cost

  /// Frames seen by the gate: round(gated_kept * downsample).
  std::size_t gated_frames() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(gated_kept) * downsample));
  }
  /// Dense frame count implied by the per-kept-frame SLAM cost.
  std::size_t dense_frames() const {
    return static_cast<std::size_t>(std::llround(dense_total_tflops * static_cast<double>(gated_kept) / gated_slam_tflops));
  }
};

inline CostModel calibrate_cost_model(const CostCalibration& cal = {}) {
  if (cal.gated_kept == 0 || !(cal.downsample >= 1.0)) throw ConfigError("cost: bad calibration inputs");
  const double slam_per_frame = cal.gated_slam_tflops / static_cast<double>(cal.gated_kept);
  CostModel m;
  m.c_gate = cal.gated_select_tflops / static_cast<double>(cal.gated_frames());
  m.c_track = cal.track_share * slam_per_frame;
  m.c_backend = slam_per_frame - m.c_track;
  return m;
}

/// Relative change (a - base) / base in percent; 0 when both are 0.
inline double delta_percent(double value, double baseline) {
  if (baseline == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return 100.0 * (value - baseline) / baseline;
}

}  // namespace leangate
