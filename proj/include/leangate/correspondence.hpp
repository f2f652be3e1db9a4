#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "leangate/errors.hpp"
#include "leangate/pointmap.hpp"

namespace leangate {

/// Per-pixel match m_{i->j}: a target pixel in frame j (or none) and the 3D
/// distance between the matched points.
struct CorrespondenceMap {
  Grid<std::optional<PixelCoord>> target;
  Grid<double> residual;

  CorrespondenceMap() = default;
  CorrespondenceMap(int rows, int cols)
      : target(rows, cols, std::nullopt),
        residual(rows, cols, std::numeric_limits<double>::infinity()) {}

  int rows() const { return target.rows(); }
  int cols() const { return target.cols(); }
  std::size_t matched_count() const {
    return static_cast<std::size_t>(
        std::count_if(target.begin(), target.end(), [](const auto& q) { return q.has_value(); }));
  }

  bool operator==(const CorrespondenceMap&) const = default;
};

struct SearchParams {
  int window = 3;          // half-size of the square search window, pixels
  int max_recenters = 10;  // re-centerings after the initial window
};

namespace detail {

inline void require_compatible(const PointMapFrame& a, const PointMapFrame& b) {
  if (!a.same_resolution(b)) throw DataError("incompatible frames");
}

struct Candidate {
  std::size_t index = 0;
  double dist2 = std::numeric_limits<double>::infinity();
  bool found = false;
};

// Scans the window rows [r0,r1] x cols [c0,c1] of `target` in row-major order;
// strict `<` keeps the first of equally distant candidates.
inline Candidate scan_window(const PointMapFrame& target, const Vec3& x, int r0, int r1, int c0,
                             int c1) {
  Candidate best;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const std::size_t idx = target.points.index(r, c);
      if (!target.is_valid(idx)) continue;
      const double d2 = (target.points[idx] - x).squaredNorm();
      if (d2 < best.dist2) {
        best = {idx, d2, true};
      }
    }
  }
  return best;
}

}  // namespace detail

/// Exact global nearest neighbour in 3D over all valid pixels of `frame_j`
/// for every valid pixel of `frame_i`. Ties go to the row-major-first target.
inline CorrespondenceMap brute_force_nn(const PointMapFrame& frame_i, const PointMapFrame& frame_j) {
  detail::require_compatible(frame_i, frame_j);
  CorrespondenceMap out(frame_i.rows(), frame_i.cols());
  for (std::size_t p = 0; p < frame_i.pixel_count(); ++p) {
    if (!frame_i.is_valid(p)) continue;
    const auto best = detail::scan_window(frame_j, frame_i.points[p], 0, frame_j.rows() - 1, 0,
                                          frame_j.cols() - 1);
    if (best.found) {
      out.target[p] = frame_j.points.coord(best.index);
      out.residual[p] = std::sqrt(best.dist2);
    }
  }
  return out;
}

/// Windowed iterative nearest-point search. For each valid source pixel the
/// window starts at the pixel's own coordinate and is re-centred on the best
/// candidate until the centre is a fixed point or `max_recenters` is reached.
/// Since the centre is always inside the next window, the distance never
/// increases across iterations.
inline CorrespondenceMap correspondence_search(const PointMapFrame& frame_i,
                                               const PointMapFrame& frame_j,
                                               const SearchParams& params = {}) {
  detail::require_compatible(frame_i, frame_j);
  if (params.window < 0) throw ConfigError("correspondence search: window must be >= 0");
  const int rows = frame_j.rows();
  const int cols = frame_j.cols();
  CorrespondenceMap out(frame_i.rows(), frame_i.cols());
  for (std::size_t p = 0; p < frame_i.pixel_count(); ++p) {
    if (!frame_i.is_valid(p)) continue;
    const Vec3& x = frame_i.points[p];
    PixelCoord centre = frame_i.points.coord(p);
    detail::Candidate best;
    for (int iter = 0; iter <= params.max_recenters; ++iter) {
      const int r0 = std::max(0, centre.row - params.window);
      const int r1 = std::min(rows - 1, centre.row + params.window);
      const int c0 = std::max(0, centre.col - params.window);
      const int c1 = std::min(cols - 1, centre.col + params.window);
      const auto cand = detail::scan_window(frame_j, x, r0, r1, c0, c1);
      if (!cand.found) break;
      best = cand;
      const PixelCoord next = frame_j.points.coord(cand.index);
      if (next == centre) break;
      centre = next;
    }
    if (best.found) {
      out.target[p] = frame_j.points.coord(best.index);
      out.residual[p] = std::sqrt(best.dist2);
    }
  }
  return out;
}

}  // namespace leangate
