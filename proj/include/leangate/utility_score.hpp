#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/correspondence.hpp"
#include "leangate/errors.hpp"
#include "leangate/pointmap.hpp"

namespace leangate {

/// Thresholds of the three-fold pixel validity test. Defaults follow the
/// MASt3R-SLAM indoor configuration.
struct ValidityThresholds {
  double tau_d = 0.1;  // meters
  double tau_c = 0.0;
  double tau_q = 1.5;

  void validate() const {
    if (!(tau_d > 0.0)) throw ConfigError("tau_d must be > 0");
    if (!(tau_c >= 0.0 && tau_c <= 1.0)) throw ConfigError("tau_c must lie in [0,1]");
    if (!(tau_q >= 0.0)) throw ConfigError("tau_q must be >= 0");
  }
};

inline constexpr double kDefaultOmegaK = 0.33;

struct UtilityBreakdown {
  double f_m = 0.0;
  double f_u = 0.0;
  double S = 0.0;
  double tau_gt = 1.0;
  std::size_t n_valid = 0;   // pixels passing the validity test
  std::size_t n_unique = 0;  // distinct targets among them
};

/// valid_kf(p): match present, residual < tau_d, min confidence > tau_c and
/// geometric-mean quality > tau_q. Pixels outside the source's valid set are false.
inline Grid<std::uint8_t> pixel_validity(const PointMapFrame& frame_i, const PointMapFrame& frame_j,
                                         const CorrespondenceMap& corr,
                                         const ValidityThresholds& thr) {
  Grid<std::uint8_t> mask(frame_i.rows(), frame_i.cols(), 0);
  for (std::size_t p = 0; p < frame_i.pixel_count(); ++p) {
    if (!frame_i.is_valid(p)) continue;
    const auto& q = corr.target[p];
    if (!q) continue;
    const std::size_t qi = frame_j.points.index(*q);
    const bool close = corr.residual[p] < thr.tau_d;
    const bool confident = std::min(frame_i.confidence[p], frame_j.confidence[qi]) > thr.tau_c;
    const bool reliable = std::sqrt(frame_i.quality[p] * frame_j.quality[qi]) > thr.tau_q;
    mask[p] = (close && confident && reliable) ? 1 : 0;
  }
  return mask;
}

inline std::size_t count_true(const Grid<std::uint8_t>& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

/// f_m: share of the source frame's valid pixels that pass the validity test.
inline double matching_fraction(const Grid<std::uint8_t>& mask, std::size_t omega_i) {
  if (omega_i == 0) return 0.0;
  return static_cast<double>(count_true(mask)) / static_cast<double>(omega_i);
}

/// Number of distinct target pixels hit by passing source pixels.
inline std::size_t unique_target_count(const CorrespondenceMap& corr, const Grid<std::uint8_t>& mask) {
  const auto& tgt = corr.target;
  std::vector<std::uint8_t> hit(tgt.size(), 0);
  std::size_t n = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p] || !tgt[p]) continue;
    const std::size_t qi = tgt.index(*tgt[p]);
    if (!hit[qi]) {
      hit[qi] = 1;
      ++n;
    }
  }
  return n;
}

/// f_u: share of the reference frame's valid pixels covered by distinct
/// valid match targets.
inline double unique_fraction(const CorrespondenceMap& corr, const Grid<std::uint8_t>& mask,
                              std::size_t omega_j) {
  if (omega_j == 0) return 0.0;
  return static_cast<double>(unique_target_count(corr, mask)) / static_cast<double>(omega_j);
}

inline double utility_score(double f_m, double f_u) { return std::min(f_m, f_u); }

/// Full breakdown from an existing correspondence map.
inline UtilityBreakdown score_from_correspondences(const PointMapFrame& frame_i,
                                                   const PointMapFrame& frame_j,
                                                   const CorrespondenceMap& corr,
                                                   const ValidityThresholds& thr) {
  const auto mask = pixel_validity(frame_i, frame_j, corr, thr);
  UtilityBreakdown b;
  b.n_valid = count_true(mask);
  b.n_unique = unique_target_count(corr, mask);
  b.f_m = matching_fraction(mask, frame_i.valid_count());
  b.f_u = unique_fraction(corr, mask, frame_j.valid_count());
  b.S = utility_score(b.f_m, b.f_u);
  b.tau_gt = 1.0 - b.S;
  return b;
}

/// Geometric utility of frame_i (current) against frame_j (reference).
inline UtilityBreakdown score(const PointMapFrame& frame_i, const PointMapFrame& frame_j,
                              const ValidityThresholds& thr = {}, const SearchParams& search = {}) {
  const auto corr = correspondence_search(frame_i, frame_j, search);
  return score_from_correspondences(frame_i, frame_j, corr, thr);
}

/// A new keyframe is due when utility drops strictly below omega_k.
inline bool keyframe_trigger(double S, double omega_k = kDefaultOmegaK) { return S < omega_k; }

inline constexpr const char* kBreakdownCsvHeader = "pair_id,i,j,f_m,f_u,S,tau_gt,n_valid,n_unique";

inline std::string breakdown_csv_row(std::size_t pair_id, std::size_t i, std::size_t j,
                                     const UtilityBreakdown& b) {
  return std::to_string(pair_id) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
         io::fmt17(b.f_m) + "," + io::fmt17(b.f_u) + "," + io::fmt17(b.S) + "," +
         io::fmt17(b.tau_gt) + "," + std::to_string(b.n_valid) + "," + std::to_string(b.n_unique);
}

}  // namespace leangate
