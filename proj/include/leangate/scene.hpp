#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "leangate/errors.hpp"
#include "leangate/geometry.hpp"
#include "leangate/pointmap.hpp"
#include "leangate/rng.hpp"
#include "leangate/trajectory.hpp"

namespace leangate {

struct SceneConfig {
  double extent = 6.0;        // side of the square room, meters
  int grid = 48;              // elevation/texture cells per side
  double relief = 0.15;       // amplitude of the smooth floor relief, meters
  int obstacles = 10;         // raised boxes on the floor
  double wall_height = 3.0;   // meters
  bool flat = false;          // degenerate control: zero elevation everywhere
  double albedo_min = 0.3;    // texture albedo range
  double albedo_max = 1.0;

  bool operator==(const SceneConfig&) const = default;
};

/// Room-sized height field with four axis-aligned walls. Elevation and albedo
/// live on the (grid+1)^2 cell vertices and are bilinearly interpolated.
struct SyntheticScene {
  std::uint64_t seed = 0;
  SceneConfig config;
  std::vector<double> elevation;  // (grid+1)^2, row-major in (y, x)
  std::vector<double> albedo;     // (grid+1)^2
  std::vector<double> wall_albedo;  // 4 walls x (grid+1) x (grid+1) over (along, height)
  double slope_bound = 0.0;       // Lipschitz bound of the elevation field

  double half() const { return 0.5 * config.extent; }
  double cell() const { return config.extent / config.grid; }
  int verts() const { return config.grid + 1; }

  struct Sample {
    double height;
    double dhdx;
    double dhdy;
  };

  /// Bilinear elevation and its gradient at world (x, y), clamped to the room.
  Sample height_at(double x, double y) const {
    const int n = config.grid;
    const double gx = std::clamp((x + half()) / cell(), 0.0, static_cast<double>(n));
    const double gy = std::clamp((y + half()) / cell(), 0.0, static_cast<double>(n));
    const int ix = std::min(static_cast<int>(gx), n - 1);
    const int iy = std::min(static_cast<int>(gy), n - 1);
    const double fx = gx - ix;
    const double fy = gy - iy;
    const auto at = [&](int r, int c) { return elevation[static_cast<std::size_t>(r) * verts() + c]; };
    const double h00 = at(iy, ix), h01 = at(iy, ix + 1), h10 = at(iy + 1, ix), h11 = at(iy + 1, ix + 1);
    const double h = (1 - fy) * ((1 - fx) * h00 + fx * h01) + fy * ((1 - fx) * h10 + fx * h11);
    const double dx = ((1 - fy) * (h01 - h00) + fy * (h11 - h10)) / cell();
    const double dy = ((1 - fx) * (h10 - h00) + fx * (h11 - h01)) / cell();
    return {h, dx, dy};
  }

  double albedo_at(double x, double y) const {
    const int n = config.grid;
    const double gx = std::clamp((x + half()) / cell(), 0.0, static_cast<double>(n));
    const double gy = std::clamp((y + half()) / cell(), 0.0, static_cast<double>(n));
    const int ix = std::min(static_cast<int>(gx), n - 1);
    const int iy = std::min(static_cast<int>(gy), n - 1);
    const double fx = gx - ix;
    const double fy = gy - iy;
    const auto at = [&](int r, int c) { return albedo[static_cast<std::size_t>(r) * verts() + c]; };
    return (1 - fy) * ((1 - fx) * at(iy, ix) + fx * at(iy, ix + 1)) +
           fy * ((1 - fx) * at(iy + 1, ix) + fx * at(iy + 1, ix + 1));
  }

  /// Albedo on wall `w` at horizontal coordinate `along` and height `z`.
  double wall_albedo_at(int w, double along, double z) const {
    const int n = config.grid;
    const double ga = std::clamp((along + half()) / cell(), 0.0, static_cast<double>(n));
    const double gz = std::clamp(z / config.wall_height * n, 0.0, static_cast<double>(n));
    const int ia = std::min(static_cast<int>(ga), n - 1);
    const int iz = std::min(static_cast<int>(gz), n - 1);
    const double fa = ga - ia;
    const double fz = gz - iz;
    const std::size_t base = static_cast<std::size_t>(w) * verts() * verts();
    const auto at = [&](int r, int c) { return wall_albedo[base + static_cast<std::size_t>(r) * verts() + c]; };
    return (1 - fz) * ((1 - fa) * at(iz, ia) + fa * at(iz, ia + 1)) +
           fz * ((1 - fa) * at(iz + 1, ia) + fa * at(iz + 1, ia + 1));
  }

  bool operator==(const SyntheticScene&) const = default;
};

namespace detail {

// Smooth value noise in [0,1] on a (n+1)^2 lattice: a few random sinusoids.
inline std::vector<double> smooth_field(Rng& rng, int n, int waves) {
  std::vector<double> out(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> ws;
  double total = 0.0;
  for (int k = 0; k < waves; ++k) {
    Wave w{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0), rng.uniform(0.0, 2.0 * std::numbers::pi),
           rng.uniform(0.5, 1.0)};
    total += w.amp;
    ws.push_back(w);
  }
  for (int r = 0; r <= n; ++r) {
    for (int c = 0; c <= n; ++c) {
      const double u = static_cast<double>(c) / n;
      const double v = static_cast<double>(r) / n;
      double s = 0.0;
      for (const auto& w : ws) s += w.amp * std::sin(2.0 * std::numbers::pi * (w.kx * u + w.ky * v) + w.phase);
      out[static_cast<std::size_t>(r) * (n + 1) + c] = 0.5 + 0.5 * s / total;
    }
  }
  return out;
}

}  // namespace detail

/// Deterministic scene for a seed: smooth low-frequency relief plus box
/// obstacles (so viewpoint changes produce occlusion) and textured walls.
inline SyntheticScene generate_scene(std::uint64_t seed, const SceneConfig& cfg = {}) {
  if (!(cfg.extent > 0.0) || cfg.grid < 2) throw ConfigError("scene: extent must be > 0 and grid >= 2");
  if (!(cfg.albedo_min >= 0.0 && cfg.albedo_max <= 1.0 && cfg.albedo_min <= cfg.albedo_max)) {
    throw ConfigError("scene: albedo range must lie in [0,1]");
  }
  SyntheticScene scene;
  scene.seed = seed;
  scene.config = cfg;
  const int n = cfg.grid;
  const int v = n + 1;
  Rng rng(derive_seed(seed, "scene"));

  scene.elevation = detail::smooth_field(rng, n, 5);
  for (double& h : scene.elevation) h = cfg.relief * (2.0 * h - 1.0);
  for (int k = 0; k < cfg.obstacles; ++k) {
    const int w = 2 + static_cast<int>(rng.below(5));
    const int d = 2 + static_cast<int>(rng.below(5));
    const int c0 = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, n - w - 3))));
    const int r0 = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, n - d - 3))));
    const double height = rng.uniform(0.3, 1.1);
    for (int r = r0; r <= std::min(n, r0 + d); ++r) {
      for (int c = c0; c <= std::min(n, c0 + w); ++c) {
        double& e = scene.elevation[static_cast<std::size_t>(r) * v + c];
        e = std::max(e, height);
      }
    }
  }
  if (cfg.flat) std::fill(scene.elevation.begin(), scene.elevation.end(), 0.0);

  scene.albedo = detail::smooth_field(rng, n, 6);
  // Per-vertex noise so neighbouring cells differ.
  for (int r = 0; r <= n; ++r) {
    for (int c = 0; c <= n; ++c) {
      double& a = scene.albedo[static_cast<std::size_t>(r) * v + c];
      a = std::clamp(0.7 * a + 0.3 * rng.uniform(), 0.0, 1.0);
      a = cfg.albedo_min + (cfg.albedo_max - cfg.albedo_min) * a;
    }
  }
  scene.wall_albedo.reserve(static_cast<std::size_t>(4) * v * v);
  for (int w = 0; w < 4; ++w) {
    auto field = detail::smooth_field(rng, n, 6);
    for (double& a : field) a = cfg.albedo_min + (cfg.albedo_max - cfg.albedo_min) * a;
    scene.wall_albedo.insert(scene.wall_albedo.end(), field.begin(), field.end());
  }

  double max_edge = 0.0;
  for (int r = 0; r <= n; ++r) {
    for (int c = 0; c <= n; ++c) {
      const double e = scene.elevation[static_cast<std::size_t>(r) * v + c];
      if (c < n) max_edge = std::max(max_edge, std::abs(scene.elevation[static_cast<std::size_t>(r) * v + c + 1] - e));
      if (r < n) max_edge = std::max(max_edge, std::abs(scene.elevation[static_cast<std::size_t>(r + 1) * v + c] - e));
    }
  }
  scene.slope_bound = std::sqrt(2.0) * max_edge / scene.cell();
  return scene;
}

/// Pinhole camera with square pixels and a principal point at the image centre.
/// Camera axes: x right, y down, z forward.
struct PinholeCamera {
  int rows = 32;
  int cols = 32;
  double hfov_deg = 55.0;

  double focal() const { return 0.5 * cols / std::tan(0.5 * deg2rad(hfov_deg)); }

  Vec3 ray(int r, int c) const {
    const double f = focal();
    return Vec3((c + 0.5 - 0.5 * cols) / f, (r + 0.5 - 0.5 * rows) / f, 1.0).normalized();
  }
};

/// Coordinate convention of rendered pointmaps.
enum class FrameConvention {
  camera,  // each frame in its own camera coordinates
  world,   // every frame in the shared scene (world) coordinates
};

struct RayHit {
  Vec3 point;
  Vec3 normal;
  double albedo;
};

/// Casts a world-space ray; returns nothing if the ray escapes over the walls.
inline std::optional<RayHit> cast_ray(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir) {
  const double half = scene.half();
  // Distance to the wall box along the ray.
  double t_exit = std::numeric_limits<double>::infinity();
  int exit_wall = -1;
  for (int axis = 0; axis < 2; ++axis) {
    if (dir[axis] > 1e-12) {
      const double t = (half - origin[axis]) / dir[axis];
      if (t < t_exit) { t_exit = t; exit_wall = axis * 2; }
    } else if (dir[axis] < -1e-12) {
      const double t = (-half - origin[axis]) / dir[axis];
      if (t < t_exit) { t_exit = t; exit_wall = axis * 2 + 1; }
    }
  }
  t_exit = std::max(0.0, std::min(t_exit, 50.0));

  const auto gap = [&](double t) {
    const Vec3 p = origin + t * dir;
    return p.z() - scene.height_at(p.x(), p.y()).height;
  };
  const double horiz = std::hypot(dir.x(), dir.y());
  const double denom = scene.slope_bound * horiz + std::max(0.0, -dir.z()) + 1e-9;

  double t = 0.0;
  double g = gap(t);
  if (g <= 0.0) return std::nullopt;  // camera below the surface
  while (t < t_exit) {
    const double step = std::max(0.004, g / denom);
    const double t_next = std::min(t + step, t_exit);
    const double g_next = gap(t_next);
    if (g_next <= 0.0) {
      double lo = t, hi = t_next;
      for (int k = 0; k < 40; ++k) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
      }
      const Vec3 p = origin + hi * dir;
      const auto s = scene.height_at(p.x(), p.y());
      return RayHit{Vec3(p.x(), p.y(), s.height), Vec3(-s.dhdx, -s.dhdy, 1.0).normalized(),
                    scene.albedo_at(p.x(), p.y())};
    }
    t = t_next;
    g = g_next;
  }
  if (exit_wall < 0) return std::nullopt;
  const Vec3 p = origin + t_exit * dir;
  if (p.z() > scene.config.wall_height) return std::nullopt;
  Vec3 normal = Vec3::Zero();
  const int axis = exit_wall / 2;
  normal[axis] = (exit_wall % 2 == 0) ? -1.0 : 1.0;
  const double along = axis == 0 ? p.y() : p.x();
  return RayHit{p, normal, scene.wall_albedo_at(exit_wall, along, p.z())};
}

/// Ray-casts the scene from a camera-to-world pose. C = cos(incidence),
/// Q = 1 + 2 * albedo, escaped rays are invalid.
inline PointMapFrame render_frame(const SyntheticScene& scene, const SE3Pose& pose,
                                  const PinholeCamera& camera, std::uint32_t frame_id = 0,
                                  FrameConvention convention = FrameConvention::camera) {
  if (camera.rows < 8 || camera.cols < 8) throw ConfigError("render: resolution must be at least 8x8");
  PointMapFrame frame(frame_id, camera.rows, camera.cols);
  const SE3Pose world_to_cam = pose.inverse();
  const Mat3 R = pose.rotation_matrix();
  for (int r = 0; r < camera.rows; ++r) {
    for (int c = 0; c < camera.cols; ++c) {
      const Vec3 dir = R * camera.ray(r, c);
      const auto hit = cast_ray(scene, pose.translation(), dir);
      if (!hit) continue;
      const std::size_t idx = frame.points.index(r, c);
      frame.points[idx] = convention == FrameConvention::world ? hit->point : world_to_cam.apply(hit->point);
      frame.confidence[idx] = std::clamp(-dir.dot(hit->normal), 0.0, 1.0);
      frame.quality[idx] = 1.0 + 2.0 * std::clamp(hit->albedo, 0.0, 1.0);
      frame.valid[idx] = 1;
    }
  }
  return frame;
}

/// Camera-to-world pose looking along heading `yaw` (about +z), tilted down by
/// `pitch` and rolled about the optical axis.
inline SE3Pose look_pose(const Vec3& position, double yaw, double pitch, double roll = 0.0) {
  const Vec3 fwd(std::cos(yaw) * std::cos(pitch), std::sin(yaw) * std::cos(pitch), -std::sin(pitch));
  const Vec3 right0 = fwd.cross(Vec3::UnitZ()).normalized();
  const Vec3 down0 = fwd.cross(right0);
  const Vec3 right = std::cos(roll) * right0 + std::sin(roll) * down0;
  const Vec3 down = fwd.cross(right);
  Mat3 R;
  R.col(0) = right;
  R.col(1) = down;
  R.col(2) = fwd;
  return SE3Pose(R, position);
}

struct TrajectoryConfig {
  double fps = 12.0;
  int control_points = 5;
  double max_step_m = 0.25;     // per-frame translation bound (strictly below 0.3)
  double max_step_deg = 8.0;    // per-frame rotation bound (strictly below 10)
  double jitter_m = 0.002;
  double jitter_deg = 0.2;
  double height_min = 1.2;
  double height_max = 1.6;
  double margin = 1.0;          // keep-out distance from walls, meters
  double path_radius = 0.7;     // control points lie within this radius of a random centre
  double yaw_sweep_min_deg = 30.0;
  double yaw_sweep_max_deg = 90.0;
};

namespace detail {

inline Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * s3);
}

inline Vec3 spline_at(const std::vector<Vec3>& ctrl, double u) {
  const int segs = static_cast<int>(ctrl.size()) - 1;
  const double x = std::clamp(u, 0.0, 1.0) * segs;
  const int k = std::min(static_cast<int>(x), segs - 1);
  const auto P = [&](int i) { return ctrl[static_cast<std::size_t>(std::clamp(i, 0, segs))]; };
  return catmull_rom(P(k - 1), P(k), P(k + 1), P(k + 2), x - k);
}

}  // namespace detail

/// Smooth camera path through random control points with a sinusoidal gaze
/// sweep. Amplitudes are shrunk until the per-step translation and rotation
/// bounds hold, then a small seeded jitter is added.
inline Trajectory generate_trajectory(const SyntheticScene& scene, std::uint64_t seed, int n_frames,
                                      const TrajectoryConfig& cfg = {}) {
  if (n_frames < 2) throw ConfigError("trajectory: n_frames must be >= 2");
  if (!(cfg.fps > 0.0)) throw ConfigError("trajectory: fps must be > 0");
  Rng rng(derive_seed(seed, "trajectory"));
  const double lim = std::max(0.1, scene.half() - cfg.margin);
  const double radius = std::min(cfg.path_radius, lim);
  const double cx = rng.uniform(-(lim - radius), lim - radius);
  const double cy = rng.uniform(-(lim - radius), lim - radius);
  std::vector<Vec3> ctrl;
  for (int k = 0; k < std::max(2, cfg.control_points); ++k) {
    ctrl.emplace_back(cx + rng.uniform(-radius, radius), cy + rng.uniform(-radius, radius),
                      rng.uniform(cfg.height_min, cfg.height_max));
  }
  const double yaw0 = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double yaw_freq = rng.uniform(0.4, 1.2);
  const double yaw_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double yaw_amp = deg2rad(rng.uniform(cfg.yaw_sweep_min_deg, cfg.yaw_sweep_max_deg));
  const double pitch_mid = deg2rad(rng.uniform(35.0, 55.0));
  double pitch_amp = deg2rad(rng.uniform(5.0, 15.0));
  const double pitch_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double roll_amp = deg2rad(rng.uniform(0.0, 4.0));

  Vec3 centroid = Vec3::Zero();
  for (const auto& c : ctrl) centroid += c;
  centroid /= static_cast<double>(ctrl.size());
  double shrink = 1.0;

  std::vector<SE3Pose> poses(static_cast<std::size_t>(n_frames));
  for (int attempt = 0; attempt < 60; ++attempt) {
    std::vector<Vec3> sc;
    for (const auto& c : ctrl) {
      Vec3 q = centroid + shrink * (c - centroid);
      q.z() = c.z();
      sc.push_back(q);
    }
    for (int k = 0; k < n_frames; ++k) {
      const double u = static_cast<double>(k) / (n_frames - 1);
      const double ang = 2.0 * std::numbers::pi * u;
      const double yaw = yaw0 + yaw_amp * std::sin(yaw_freq * ang + yaw_phase);
      const double pitch = pitch_mid + pitch_amp * std::sin(1.3 * ang + pitch_phase);
      const double roll = roll_amp * std::sin(0.7 * ang);
      poses[static_cast<std::size_t>(k)] = look_pose(detail::spline_at(sc, u), yaw, pitch, roll);
    }
    double worst_t = 0.0, worst_r = 0.0;
    for (int k = 1; k < n_frames; ++k) {
      const auto d = pose_delta(poses[static_cast<std::size_t>(k - 1)], poses[static_cast<std::size_t>(k)]);
      worst_t = std::max(worst_t, d.translation_m);
      worst_r = std::max(worst_r, d.rotation_deg);
    }
    if (worst_t <= cfg.max_step_m && worst_r <= cfg.max_step_deg) break;
    if (worst_t > cfg.max_step_m) shrink *= 0.85;
    if (worst_r > cfg.max_step_deg) {
      yaw_amp *= 0.85;
      pitch_amp *= 0.85;
      roll_amp *= 0.85;
    }
  }

  Trajectory traj;
  for (int k = 0; k < n_frames; ++k) {
    const SE3Pose& p = poses[static_cast<std::size_t>(k)];
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double angle = deg2rad(cfg.jitter_deg) * rng.uniform(-1.0, 1.0);
    const Quat jr(Eigen::AngleAxisd(angle, axis));
    const Vec3 jt(cfg.jitter_m * rng.uniform(-1.0, 1.0), cfg.jitter_m * rng.uniform(-1.0, 1.0),
                  cfg.jitter_m * rng.uniform(-1.0, 1.0));
    traj.push_back({k / cfg.fps, SE3Pose(p.rotation() * jr, p.translation() + jt)});
  }
  return traj;
}

}  // namespace leangate
