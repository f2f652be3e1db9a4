#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/errors.hpp"
#include "leangate/geometry.hpp"

namespace leangate {

struct StampedPose {
  double timestamp = 0.0;  // seconds
  SE3Pose pose;            // camera-to-world
};

/// Timestamped pose sequence with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<StampedPose> poses) : poses_(std::move(poses)) { validate(); }

  void push_back(const StampedPose& sp) {
    if (!poses_.empty() && !(sp.timestamp > poses_.back().timestamp)) {
      throw DataError("trajectory timestamps must be strictly increasing");
    }
    poses_.push_back(sp);
  }

  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const StampedPose& operator[](std::size_t i) const { return poses_[i]; }
  const std::vector<StampedPose>& poses() const { return poses_; }
  auto begin() const { return poses_.begin(); }
  auto end() const { return poses_.end(); }

  void validate() const {
    for (std::size_t i = 1; i < poses_.size(); ++i) {
      if (!(poses_[i].timestamp > poses_[i - 1].timestamp)) {
        throw DataError("trajectory timestamps must be strictly increasing");
      }
    }
  }

 private:
  std::vector<StampedPose> poses_;
};

// TUM plain-text trajectory: "timestamp tx ty tz qx qy qz qw" per line,
// '#' starts a comment.

inline Trajectory parse_tum(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) {
        throw DataError("TUM trajectory: malformed line " + std::to_string(line_no));
      }
    }
    std::string extra;
    if (ls >> extra) throw DataError("TUM trajectory: trailing fields on line " + std::to_string(line_no));
    const Quat q(v[7], v[4], v[5], v[6]);
    if (q.norm() < 1e-12) throw DataError("TUM trajectory: zero quaternion on line " + std::to_string(line_no));
    traj.push_back({v[0], SE3Pose(q, Vec3(v[1], v[2], v[3]))});
  }
  return traj;
}

inline std::string format_tum(const Trajectory& traj) {
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  char buf[320];
  for (const auto& sp : traj) {
    const Vec3& t = sp.pose.translation();
    const Quat& q = sp.pose.rotation();
    std::snprintf(buf, sizeof(buf), "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", sp.timestamp, t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out += buf;
  }
  return out;
}

inline Trajectory load_tum(const std::filesystem::path& path) { return parse_tum(io::read_file(path)); }

inline void save_tum(const std::filesystem::path& path, const Trajectory& traj) {
  io::write_file_atomic(path, format_tum(traj));
}

/// Index pairs (est, gt) matched by nearest timestamp within `max_dt` seconds.
/// Each ground-truth sample is used at most once.
inline std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& est,
                                                                  const Trajectory& gt,
                                                                  double max_dt = 0.02) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (gt.empty()) return out;
  std::vector<bool> used(gt.size(), false);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est[i].timestamp;
    const auto it = std::lower_bound(gt.begin(), gt.end(), t,
                                     [](const StampedPose& sp, double v) { return sp.timestamp < v; });
    std::size_t hi = static_cast<std::size_t>(it - gt.begin());
    std::size_t best = gt.size();
    double best_dt = max_dt;
    for (std::size_t k : {hi == 0 ? gt.size() : hi - 1, hi}) {
      if (k >= gt.size() || used[k]) continue;
      const double dt = std::abs(gt[k].timestamp - t);
      if (dt <= best_dt && (best == gt.size() || dt < best_dt)) {
        best = k;
        best_dt = dt;
      }
    }
    if (best != gt.size()) {
      used[best] = true;
      out.emplace_back(i, best);
    }
  }
  return out;
}

}  // namespace leangate
