#pragma once

#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "leangate/pointmap.hpp"
#include "leangate/utility_score.hpp"

namespace testing_support {

struct OracleScore {
  double f_m = 0.0;
  double f_u = 0.0;
  double S = 0.0;
};

/// Straight-line reference: global nearest neighbour over every valid target
/// pixel, the three validity clauses, and set-based counting.
inline OracleScore oracle_score(const leangate::PointMapFrame& fi, const leangate::PointMapFrame& fj,
                                const leangate::ValidityThresholds& thr = {}) {
  std::size_t omega_i = 0, omega_j = 0, n_valid = 0;
  std::set<std::pair<int, int>> targets;
  for (int r = 0; r < fj.rows(); ++r)
    for (int c = 0; c < fj.cols(); ++c)
      if (fj.valid(r, c)) ++omega_j;
  for (int r = 0; r < fi.rows(); ++r) {
    for (int c = 0; c < fi.cols(); ++c) {
      if (!fi.valid(r, c)) continue;
      ++omega_i;
      double best = std::numeric_limits<double>::infinity();
      int br = -1, bc = -1;
      for (int rr = 0; rr < fj.rows(); ++rr) {
        for (int cc = 0; cc < fj.cols(); ++cc) {
          if (!fj.valid(rr, cc)) continue;
          const double d = (fi.points(r, c) - fj.points(rr, cc)).norm();
          if (d < best) {
            best = d;
            br = rr;
            bc = cc;
          }
        }
      }
      if (br < 0) continue;
      if (!(best < thr.tau_d)) continue;
      if (!(std::min(fi.confidence(r, c), fj.confidence(br, bc)) > thr.tau_c)) continue;
      if (!(std::sqrt(fi.quality(r, c) * fj.quality(br, bc)) > thr.tau_q)) continue;
      ++n_valid;
      targets.insert({br, bc});
    }
  }
  OracleScore s;
  s.f_m = omega_i ? static_cast<double>(n_valid) / static_cast<double>(omega_i) : 0.0;
  s.f_u = omega_j ? static_cast<double>(targets.size()) / static_cast<double>(omega_j) : 0.0;
  s.S = std::min(s.f_m, s.f_u);
  return s;
}

/// The 3x3 pair in which exactly five source pixels pass every clause and
/// land on four distinct targets.
inline std::pair<leangate::PointMapFrame, leangate::PointMapFrame> hand_case_3x3() {
  using leangate::Vec3;
  leangate::PointMapFrame fi(0, 3, 3), fj(1, 3, 3);
  for (std::size_t k = 0; k < 9; ++k) {
    fj.points[k] = Vec3(static_cast<double>(k % 3), static_cast<double>(k / 3), 0.0);
    fj.confidence[k] = 0.9;
    fj.quality[k] = 2.0;
    fj.valid[k] = 1;
    fi.confidence[k] = 0.9;
    fi.quality[k] = 2.0;
    fi.valid[k] = 1;
  }
  const Vec3 up(0, 0, 1);
  fi.points[0] = fj.points[0];
  fi.points[1] = fj.points[1];
  fi.points[2] = fj.points[2];
  fi.points[3] = fj.points[3];
  fi.points[4] = fj.points[3] + 0.05 * up;  // duplicate target
  fi.points[5] = fj.points[5] + 0.5 * up;   // residual too large
  fi.points[6] = fj.points[6];
  fi.confidence[6] = 0.0;                   // confidence fails
  fi.points[7] = fj.points[7];
  fi.quality[7] = 1.0;                      // sqrt(1 * 2) <= 1.5
  fi.points[8] = fj.points[8] + 0.2 * up;   // residual too large
  return {fi, fj};
}

}  // namespace testing_support
