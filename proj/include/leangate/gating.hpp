#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/dataset.hpp"
#include "leangate/errors.hpp"
#include "leangate/gate_regressor.hpp"
#include "leangate/oracle.hpp"
#include "leangate/utility_score.hpp"

namespace leangate {

enum class PolicyKind { dense, stride, teacher_gate, student_gate };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::dense;
  int stride = 1;
  double tau_keep = 0.5;
  double omega_k = kDefaultOmegaK;
  bool inclusive = true;  // student keeps on tau >= tau_keep, else tau > tau_keep

  void validate() const {
    if (stride < 1) throw ConfigError("policy: stride must be >= 1");
    if (!(tau_keep >= 0.0 && tau_keep <= 1.0)) throw ConfigError("policy: tau_keep must lie in [0,1]");
  }

  std::string name() const {
    switch (kind) {
      case PolicyKind::dense: return "dense";
      case PolicyKind::stride: return "stride(" + std::to_string(stride) + ")";
      case PolicyKind::teacher_gate: return "teacher_gate";
      case PolicyKind::student_gate: return "student_gate";
    }
    return "unknown";
  }
};

/// Parses "dense", "stride(n)", "teacher_gate" or "student_gate".
inline PolicyConfig parse_policy(const std::string& text, PolicyConfig base = {}) {
  if (text == "dense") {
    base.kind = PolicyKind::dense;
  } else if (text == "teacher_gate") {
    base.kind = PolicyKind::teacher_gate;
  } else if (text == "student_gate") {
    base.kind = PolicyKind::student_gate;
  } else if (text.rfind("stride(", 0) == 0 && text.size() > 8 && text.back() == ')') {
    base.kind = PolicyKind::stride;
    const std::string digits = text.substr(7, text.size() - 8);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos || digits.size() > 9) {
      throw ConfigError("policy: bad stride '" + text + "'");
    }
    base.stride = std::stoi(digits);
  } else {
    throw ConfigError("policy: unknown policy '" + text + "'");
  }
  base.validate();
  return base;
}

struct GateDecision {
  std::uint32_t frame = 0;
  std::string policy;
  std::optional<std::uint32_t> ref;  // keyframe the frame was compared with; none for frame 0
  std::optional<double> score;       // tau for the student, S for the teacher
  bool kept = false;

  bool operator==(const GateDecision&) const = default;
};

/// Scores the current frame against the reference keyframe (both indices
/// into the stream).
using PairScorer = std::function<double(std::size_t ref, std::size_t cur)>;

/// Runs one policy over a stream of `n_frames` frames. Frame 0 is kept and
/// becomes the reference; every kept frame replaces the reference.
inline std::vector<GateDecision> run_policy(std::size_t n_frames, const PolicyConfig& cfg,
                                            const PairScorer& scorer = {}) {
  cfg.validate();
  if (n_frames == 0) throw DataError("run_policy: empty stream");
  const bool needs_scorer = cfg.kind == PolicyKind::teacher_gate || cfg.kind == PolicyKind::student_gate;
  if (needs_scorer && !scorer) throw ConfigError("run_policy: " + cfg.name() + " needs a scorer");
  std::vector<GateDecision> out;
  out.reserve(n_frames);
  std::size_t ref = 0;
  for (std::size_t k = 0; k < n_frames; ++k) {
    GateDecision d;
    d.frame = static_cast<std::uint32_t>(k);
    d.policy = cfg.name();
    if (k == 0) {
      d.kept = true;
      out.push_back(std::move(d));
      continue;
    }
    d.ref = static_cast<std::uint32_t>(ref);
    switch (cfg.kind) {
      case PolicyKind::dense:
        d.kept = true;
        break;
      case PolicyKind::stride:
        d.kept = k % static_cast<std::size_t>(cfg.stride) == 0;
        break;
      case PolicyKind::teacher_gate: {
        const double S = scorer(ref, k);
        d.score = S;
        d.kept = keyframe_trigger(S, cfg.omega_k);
        break;
      }
      case PolicyKind::student_gate: {
        const double tau = scorer(ref, k);
        d.score = tau;
        d.kept = cfg.inclusive ? tau >= cfg.tau_keep : tau > cfg.tau_keep;
        break;
      }
    }
    if (d.kept) ref = k;
    out.push_back(std::move(d));
  }
  return out;
}

/// Utility score S of the current frame against the reference, both aligned
/// into the reference camera with the stream poses.
inline PairScorer teacher_scorer(const std::vector<PointMapFrame>& frames, const Trajectory& traj,
                                 const ValidityThresholds& thr = {}, const SearchParams& search = {}) {
  return [&frames, &traj, thr, search](std::size_t ref, std::size_t cur) {
    return label_pair(frames[cur], traj[cur].pose, frames[ref], traj[ref].pose, thr, search).breakdown.S;
  };
}

/// Student prediction tau for (reference, current) from the two frames and
/// their poses.
template <typename Scalar>
double predict(const GateRegressorT<Scalar>& model, const PinholeCamera& camera, const PointMapFrame& ref_frame,
               const SE3Pose& ref_pose, const PointMapFrame& cur_frame, const SE3Pose& cur_pose) {
  const auto [cur_tok, ref_tok] = pair_tokens(cur_frame, cur_pose, ref_frame, ref_pose, camera);
  return forward(model, std::vector<double>(ref_tok.begin(), ref_tok.end()),
                 std::vector<double>(cur_tok.begin(), cur_tok.end()))
      .tau;
}

template <typename Scalar>
PairScorer student_scorer(const GateRegressorT<Scalar>& model, const PinholeCamera& camera,
                          const std::vector<PointMapFrame>& frames, const Trajectory& traj) {
  return [&model, camera, &frames, &traj](std::size_t ref, std::size_t cur) {
    return predict(model, camera, frames[ref], traj[ref].pose, frames[cur], traj[cur].pose);
  };
}

inline std::size_t kept_count(const std::vector<GateDecision>& decisions) {
  std::size_t n = 0;
  for (const auto& d : decisions) n += d.kept ? 1 : 0;
  return n;
}

inline double kept_fraction(const std::vector<GateDecision>& decisions) {
  return decisions.empty() ? 0.0 : static_cast<double>(kept_count(decisions)) / static_cast<double>(decisions.size());
}

/// All frames over kept frames (1 for dense).
inline double downsample_factor(const std::vector<GateDecision>& decisions) {
  const auto kept = kept_count(decisions);
  return kept == 0 ? 0.0 : static_cast<double>(decisions.size()) / static_cast<double>(kept);
}

/// Share of frames on which both logs make the same keep/skip decision.
inline double agreement_rate(const std::vector<GateDecision>& a, const std::vector<GateDecision>& b) {
  if (a.size() != b.size() || a.empty()) throw DataError("agreement: decision logs differ in length");
  std::size_t same = 0;
  for (std::size_t k = 0; k < a.size(); ++k) same += a[k].kept == b[k].kept ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

/// Kept fraction of the student gate at each threshold (ascending).
inline std::vector<double> sweep_threshold(std::size_t n_frames, const PairScorer& scorer,
                                           const std::vector<double>& thresholds, PolicyConfig base = {}) {
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    if (thresholds[k] < thresholds[k - 1]) throw ConfigError("sweep: thresholds must be sorted ascending");
  }
  base.kind = PolicyKind::student_gate;
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    base.tau_keep = t;
    out.push_back(kept_fraction(run_policy(n_frames, base, scorer)));
  }
  return out;
}

inline constexpr const char* kDecisionCsvHeader = "frame,policy,ref,score,kept";

inline std::string format_decisions_csv(const std::vector<GateDecision>& decisions) {
  std::ostringstream os;
  os << kDecisionCsvHeader << '\n';
  for (const auto& d : decisions) {
    os << d.frame << ',' << d.policy << ',' << (d.ref ? std::to_string(*d.ref) : std::string()) << ','
       << (d.score ? io::fmt17(*d.score) : std::string()) << ',' << (d.kept ? 1 : 0) << '\n';
  }
  return os.str();
}

inline std::vector<GateDecision> parse_decisions_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kDecisionCsvHeader) throw DataError("decisions: unexpected header");
  std::vector<GateDecision> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 5) throw DataError("decisions: expected 5 columns");
    GateDecision d;
    d.frame = detail::parse_number<std::uint32_t>(cells[0], "frame");
    d.policy = cells[1];
    if (!cells[2].empty()) d.ref = detail::parse_number<std::uint32_t>(cells[2], "ref");
    if (!cells[3].empty()) d.score = detail::parse_number<double>(cells[3], "score");
    if (cells[4] != "0" && cells[4] != "1") throw DataError("decisions: kept must be 0 or 1");
    d.kept = cells[4] == "1";
    out.push_back(std::move(d));
  }
  if (out.empty()) throw DataError("decisions: empty log");
  return out;
}

}  // namespace leangate
