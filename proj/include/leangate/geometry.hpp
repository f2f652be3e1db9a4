#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace leangate {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Angle of the rotation encoded by a unit quaternion, in radians, in [0, pi].
inline double rotation_angle(const Quat& q) {
  const double w = std::min(1.0, std::abs(q.w()));
  const double s = q.vec().norm();
  return 2.0 * std::atan2(s, w);
}

/// Rigid transform x -> R x + t. The quaternion is renormalized on every
/// construction so compositions do not drift off the unit sphere.
class SE3Pose {
 public:
  SE3Pose() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
  SE3Pose(const Quat& rotation, const Vec3& translation)
      : rotation_(rotation.normalized()), translation_(translation) {}
  SE3Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(Quat(rotation).normalized()), translation_(translation) {}

  static SE3Pose identity() { return {}; }

  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  SE3Pose inverse() const {
    const Quat qi = rotation_.conjugate();
    return {qi, -(qi * translation_)};
  }

  /// (a * b).apply(x) == a.apply(b.apply(x))
  friend SE3Pose operator*(const SE3Pose& a, const SE3Pose& b) {
    return {a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_};
  }

  double rotation_angle_rad() const { return rotation_angle(rotation_); }

 private:
  Quat rotation_;
  Vec3 translation_;
};

/// Relative motion magnitude between two camera-to-world poses.
struct PoseDelta {
  double rotation_deg = 0.0;
  double translation_m = 0.0;
};

inline PoseDelta pose_delta(const SE3Pose& a, const SE3Pose& b) {
  const SE3Pose rel = a.inverse() * b;
  return {rad2deg(rel.rotation_angle_rad()), (b.translation() - a.translation()).norm()};
}

/// Similarity transform x -> s R x + t.
class Sim3Transform {
 public:
  Sim3Transform() : scale_(1.0), rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
  Sim3Transform(double scale, const Quat& rotation, const Vec3& translation)
      : scale_(scale), rotation_(rotation.normalized()), translation_(translation) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw std::invalid_argument("Sim3Transform: scale must be positive");
    }
  }

  double scale() const { return scale_; }
  const Quat& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return scale_ * (rotation_ * p) + translation_; }

  /// Applies the similarity to a camera pose: positions are scaled, the
  /// orientation is rotated.
  SE3Pose apply(const SE3Pose& pose) const {
    return {rotation_ * pose.rotation(), apply(pose.translation())};
  }

  Sim3Transform inverse() const {
    const Quat qi = rotation_.conjugate();
    return {1.0 / scale_, qi, -(qi * translation_) / scale_};
  }

 private:
  double scale_;
  Quat rotation_;
  Vec3 translation_;
};

}  // namespace leangate
