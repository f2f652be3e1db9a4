#pragma once

#include <cstdint>
#include <vector>

#include "leangate/geometry.hpp"
#include "leangate/pointmap.hpp"
#include "leangate/rng.hpp"
#include "leangate/trajectory.hpp"

namespace testing_support {

using namespace leangate;

inline Quat random_rotation(Rng& rng) {
  Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q.normalized();
}

inline SE3Pose random_pose(Rng& rng, double spread = 5.0) {
  return {random_rotation(rng), Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread),
                                     rng.uniform(-spread, spread))};
}

inline Vec3 random_point(Rng& rng, double spread = 5.0) {
  return {rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread)};
}

/// Frame with points scattered in a unit cube, random C in [0,1], Q in [1,3]
/// and a share of invalid pixels.
inline PointMapFrame random_frame(Rng& rng, int rows, int cols, double invalid_share = 0.1, double spread = 0.5) {
  PointMapFrame f(0, rows, cols);
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    f.points[i] = random_point(rng, spread);
    f.confidence[i] = rng.uniform();
    f.quality[i] = rng.uniform(1.0, 3.0);
    f.valid[i] = rng.uniform() >= invalid_share ? 1 : 0;
  }
  return f;
}

/// Frame whose points lie near a smooth surface so that local search is
/// meaningful; `offset` perturbs every point.
inline PointMapFrame surface_frame(Rng& rng, int rows, int cols, double noise, double invalid_share = 0.0) {
  PointMapFrame f(0, rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = f.points.index(r, c);
      const double x = 0.05 * c, y = 0.05 * r;
      f.points[i] = Vec3(x + noise * rng.normal(), y + noise * rng.normal(), 2.0 + 0.1 * std::sin(x + y));
      f.confidence[i] = rng.uniform(0.1, 1.0);
      f.quality[i] = rng.uniform(1.0, 3.0);
      f.valid[i] = rng.uniform() >= invalid_share ? 1 : 0;
    }
  }
  return f;
}

inline Trajectory random_walk_trajectory(Rng& rng, std::size_t n, double dt = 1.0 / 30.0) {
  Trajectory t;
  Vec3 pos = Vec3::Zero();
  Quat q = Quat::Identity();
  for (std::size_t k = 0; k < n; ++k) {
    pos += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.05 + Vec3(0.02, 0.01, 0.0);
    q = (q * Quat(Eigen::AngleAxisd(0.05 * rng.normal(), Vec3::UnitZ()))).normalized();
    t.push_back({static_cast<double>(k) * dt, SE3Pose(q, pos)});
  }
  return t;
}

}  // namespace testing_support
