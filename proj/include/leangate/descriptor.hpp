#pragma once

#include <cmath>
#include <vector>

#include "leangate/geometry.hpp"
#include "leangate/pointmap.hpp"
#include "leangate/scene.hpp"

namespace leangate {

/// Layout of the pose-aware frame token: three 8x8 pooled channels followed
/// by two summary statistics.
struct DescriptorLayout {
  static constexpr int kGrid = 8;
  static constexpr int kCells = kGrid * kGrid;
  static constexpr int kDepthOffset = 0;         // C-weighted depth in the reference camera
  static constexpr int kCoverageOffset = kCells;  // share of pixels that land inside the reference view
  static constexpr int kShiftOffset = 2 * kCells;  // mean depth change own camera -> reference camera
  static constexpr int kStatsOffset = 3 * kCells;  // mean, std of reference-camera depth
  static constexpr int kDim = 3 * kCells + 2;
};

/// Token for one frame of a pair. `frame` is in its own camera coordinates and
/// `to_reference` maps those into the reference camera (identity for the
/// reference frame itself). Pixels are pooled into an 8x8 grid; an invalid
/// frame yields all zeros.
inline std::vector<double> extract_descriptor(const PointMapFrame& frame, const PinholeCamera& camera,
                                              const SE3Pose& to_reference = SE3Pose::identity()) {
  constexpr int G = DescriptorLayout::kGrid;
  std::vector<double> out(DescriptorLayout::kDim, 0.0);
  std::vector<double> depth_w(DescriptorLayout::kCells, 0.0);
  std::vector<double> shift_w(DescriptorLayout::kCells, 0.0);
  std::vector<double> pixels(DescriptorLayout::kCells, 0.0);
  const double f = camera.focal();
  const int rows = frame.rows();
  const int cols = frame.cols();
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int cell = (r * G / rows) * G + (c * G / cols);
      pixels[static_cast<std::size_t>(cell)] += 1.0;
      const std::size_t idx = frame.points.index(r, c);
      if (!frame.is_valid(idx)) continue;
      const Vec3& own = frame.points[idx];
      const Vec3 x = to_reference.apply(own);
      const double w = frame.confidence[idx];
      out[DescriptorLayout::kDepthOffset + cell] += w * x.z();
      depth_w[static_cast<std::size_t>(cell)] += w;
      out[DescriptorLayout::kShiftOffset + cell] += x.z() - own.z();
      shift_w[static_cast<std::size_t>(cell)] += 1.0;
      if (x.z() > 1e-3) {
        const double u = f * x.x() / x.z() + 0.5 * camera.cols;
        const double v = f * x.y() / x.z() + 0.5 * camera.rows;
        if (u >= 0.0 && u < camera.cols && v >= 0.0 && v < camera.rows) {
          out[DescriptorLayout::kCoverageOffset + cell] += 1.0;
        }
      }
      sum += x.z();
      sum2 += x.z() * x.z();
      ++n;
    }
  }
  for (int cell = 0; cell < DescriptorLayout::kCells; ++cell) {
    const auto k = static_cast<std::size_t>(cell);
    if (depth_w[k] > 0.0) out[DescriptorLayout::kDepthOffset + cell] /= depth_w[k];
    else out[DescriptorLayout::kDepthOffset + cell] = 0.0;
    if (shift_w[k] > 0.0) out[DescriptorLayout::kShiftOffset + cell] /= shift_w[k];
    if (pixels[k] > 0.0) out[DescriptorLayout::kCoverageOffset + cell] /= pixels[k];
  }
  if (n > 0) {
    const double mean = sum / static_cast<double>(n);
    out[DescriptorLayout::kStatsOffset] = mean;
    out[DescriptorLayout::kStatsOffset + 1] = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean));
  }
  return out;
}

}  // namespace leangate
