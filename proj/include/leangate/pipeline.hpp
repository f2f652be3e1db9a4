#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/errors.hpp"
#include "leangate/gating.hpp"
#include "leangate/geometry.hpp"
#include "leangate/pointmap.hpp"
#include "leangate/rng.hpp"
#include "leangate/trajectory.hpp"

namespace leangate {

/// Stand-in tracker: kept frames receive the ground-truth pose plus seeded
/// per-frame noise, skipped frames are interpolated between the surrounding
/// kept frames (held after the last one). The output is additionally
/// expressed in a seeded similarity frame, as a monocular estimate would be.
struct TrackingNoise {
  double translation_m = 0.01;
  double rotation_deg = 0.5;
  bool similarity_frame = true;
};

struct TrackingEstimate {
  std::vector<SE3Pose> world_poses;  // estimate in the ground-truth frame
  Trajectory trajectory;             // estimate as emitted, in its own similarity frame
};

namespace detail {

inline SE3Pose noisy_pose(const SE3Pose& gt, std::uint64_t seed, std::size_t frame, const TrackingNoise& noise) {
  Rng rng(derive_seed(seed, "track", static_cast<std::uint64_t>(frame)));
  const Vec3 dt(rng.normal(), rng.normal(), rng.normal());
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  const double angle = deg2rad(noise.rotation_deg) * rng.normal();
  const Quat dq = axis.norm() > 0.0 ? Quat(Eigen::AngleAxisd(angle, axis.normalized())) : Quat::Identity();
  return {dq * gt.rotation(), gt.translation() + noise.translation_m * dt};
}

inline SE3Pose interpolate(const SE3Pose& a, const SE3Pose& b, double s) {
  return {a.rotation().slerp(s, b.rotation()), (1.0 - s) * a.translation() + s * b.translation()};
}

}  // namespace detail

inline TrackingEstimate simulate_tracking(const Trajectory& gt, const std::vector<GateDecision>& decisions,
                                          std::uint64_t seed, const TrackingNoise& noise = {}) {
  if (gt.size() != decisions.size()) throw DataError("tracking: trajectory and decision log differ in length");
  if (gt.empty()) throw DataError("tracking: empty stream");
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < decisions.size(); ++k) {
    if (decisions[k].kept) kept.push_back(k);
  }
  if (kept.empty() || kept.front() != 0) throw DataError("tracking: frame 0 must be kept");
  TrackingEstimate est;
  est.world_poses.resize(gt.size());
  for (std::size_t k : kept) est.world_poses[k] = detail::noisy_pose(gt[k].pose, seed, k, noise);
  for (std::size_t n = 0; n < kept.size(); ++n) {
    const std::size_t a = kept[n];
    const std::size_t b = n + 1 < kept.size() ? kept[n + 1] : gt.size();
    for (std::size_t k = a + 1; k < b; ++k) {
      if (b == gt.size()) {
        est.world_poses[k] = est.world_poses[a];
      } else {
        const double s = (gt[k].timestamp - gt[a].timestamp) / (gt[b].timestamp - gt[a].timestamp);
        est.world_poses[k] = detail::interpolate(est.world_poses[a], est.world_poses[b], s);
      }
    }
  }
  Sim3Transform frame;
  if (noise.similarity_frame) {
    Rng rng(derive_seed(seed, "similarity"));
    const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    frame = Sim3Transform(rng.uniform(0.5, 2.0), Quat(Eigen::AngleAxisd(rng.uniform(0.0, M_PI), axis.normalized())),
                          Vec3(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)));
  }
  for (std::size_t k = 0; k < gt.size(); ++k) {
    est.trajectory.push_back({gt[k].timestamp, frame.apply(est.world_poses[k])});
  }
  return est;
}

/// World-space points of the selected frames (camera-frame pointmaps placed
/// with `poses`), taking every `pixel_stride`-th row and column.
inline std::vector<Vec3> fuse_points(const std::vector<PointMapFrame>& frames, const std::vector<SE3Pose>& poses,
                                     const std::vector<bool>& selected, int pixel_stride = 2) {
  if (frames.size() != poses.size() || frames.size() != selected.size()) {
    throw DataError("fuse: frame, pose and selection counts differ");
  }
  if (pixel_stride < 1) throw ConfigError("fuse: pixel_stride must be >= 1");
  std::vector<Vec3> out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!selected[f]) continue;
    const auto& frame = frames[f];
    for (int r = 0; r < frame.rows(); r += pixel_stride) {
      for (int c = 0; c < frame.cols(); c += pixel_stride) {
        const std::size_t idx = frame.points.index(r, c);
        if (frame.is_valid(idx)) out.push_back(poses[f].apply(frame.points[idx]));
      }
    }
  }
  return out;
}

inline std::vector<bool> kept_mask(const std::vector<GateDecision>& decisions) {
  std::vector<bool> m;
  m.reserve(decisions.size());
  for (const auto& d : decisions) m.push_back(d.kept);
  return m;
}

// Point sets as plain text, one "x y z" line per point.

inline std::string format_xyz(const std::vector<Vec3>& points) {
  std::string out;
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  return out;
}

inline std::vector<Vec3> parse_xyz(const std::string& text) {
  std::vector<Vec3> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw DataError("xyz: malformed line '" + line + "'");
    out.emplace_back(x, y, z);
  }
  return out;
}

}  // namespace leangate
