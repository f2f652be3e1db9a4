#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "leangate/correspondence.hpp"
#include "leangate/errors.hpp"
#include "leangate/geometry.hpp"
#include "leangate/pointmap.hpp"
#include "leangate/rng.hpp"
#include "leangate/trajectory.hpp"
#include "leangate/utility_score.hpp"

namespace leangate {

struct FramePair {
  std::uint32_t i = 0;  // current frame
  std::uint32_t j = 0;  // reference frame
  bool operator==(const FramePair&) const = default;
};

struct PairSamplingConfig {
  int rotation_bins = 4;
  int translation_bins = 4;
};

/// Draws ordered frame pairs stratified over relative-pose magnitude rather
/// than time index. Bin edges are the quantiles of rotation angle and
/// translation over all candidate pairs; bins are visited round-robin and
/// each contributes one pair per round until `n_pairs` are drawn or every
/// bin is exhausted.
inline std::vector<FramePair> sample_pairs(const Trajectory& traj, std::uint64_t seed, std::size_t n_pairs,
                                           const PairSamplingConfig& cfg = {}) {
  if (traj.size() < 2) throw DataError("sample_pairs: trajectory needs at least 2 frames");
  if (n_pairs < 1) throw ConfigError("sample_pairs: n_pairs must be >= 1");
  const std::size_t n = traj.size();
  struct Cand {
    FramePair pair;
    PoseDelta delta;
  };
  std::vector<Cand> cands;
  cands.reserve(n * (n - 1));
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i == j) continue;
      cands.push_back({{i, j}, pose_delta(traj[j].pose, traj[i].pose)});
    }
  }
  const auto quantile_edges = [&](auto key, int bins) {
    std::vector<double> v;
    v.reserve(cands.size());
    for (const auto& c : cands) v.push_back(key(c.delta));
    std::sort(v.begin(), v.end());
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) edges.push_back(v[v.size() * static_cast<std::size_t>(b) / bins]);
    return edges;
  };
  const auto bin_of = [](const std::vector<double>& edges, double x) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
  };
  const int rb = std::max(1, cfg.rotation_bins);
  const int tb = std::max(1, cfg.translation_bins);
  const auto rot_edges = quantile_edges([](const PoseDelta& d) { return d.rotation_deg; }, rb);
  const auto trans_edges = quantile_edges([](const PoseDelta& d) { return d.translation_m; }, tb);

  std::vector<std::vector<FramePair>> bins(static_cast<std::size_t>(rb * tb));
  for (const auto& c : cands) {
    const int b = bin_of(rot_edges, c.delta.rotation_deg) * tb + bin_of(trans_edges, c.delta.translation_m);
    bins[static_cast<std::size_t>(b)].push_back(c.pair);
  }
  Rng rng(derive_seed(seed, "pairs"));
  for (auto& b : bins) rng.shuffle(b.begin(), b.end());

  std::vector<FramePair> out;
  std::vector<std::size_t> cursor(bins.size(), 0);
  bool progress = true;
  while (out.size() < n_pairs && progress) {
    progress = false;
    for (std::size_t b = 0; b < bins.size() && out.size() < n_pairs; ++b) {
      if (cursor[b] < bins[b].size()) {
        out.push_back(bins[b][cursor[b]++]);
        progress = true;
      }
    }
  }
  return out;
}

/// Re-expresses a camera-frame pointmap in the reference camera's coordinates
/// using the two camera-to-world poses.
inline PointMapFrame align_to_reference(const PointMapFrame& frame, const SE3Pose& frame_pose,
                                        const SE3Pose& reference_pose) {
  return frame.transformed(reference_pose.inverse() * frame_pose);
}

struct LabelResult {
  UtilityBreakdown breakdown;
  PoseDelta delta;
  PointMapFrame aligned_current;  // frame i in frame j's camera coordinates
};

/// Teacher label for the ordered pair (current i, reference j): both
/// pointmaps in j's camera frame, then correspondence search and scoring;
/// tau_gt = 1 - S.
inline LabelResult label_pair(const PointMapFrame& frame_i, const SE3Pose& pose_i,
                              const PointMapFrame& frame_j, const SE3Pose& pose_j,
                              const ValidityThresholds& thr = {}, const SearchParams& search = {}) {
  if (!frame_i.same_resolution(frame_j)) throw DataError("incompatible frames");
  LabelResult out;
  out.aligned_current = align_to_reference(frame_i, pose_i, pose_j);
  out.breakdown = score(out.aligned_current, frame_j, thr, search);
  out.delta = pose_delta(pose_j, pose_i);
  return out;
}

}  // namespace leangate
