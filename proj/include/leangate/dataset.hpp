#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/descriptor.hpp"
#include "leangate/errors.hpp"
#include "leangate/gate_regressor.hpp"
#include "leangate/oracle.hpp"
#include "leangate/rng.hpp"
#include "leangate/scene.hpp"

namespace leangate {

struct DatasetConfig {
  std::uint64_t seed = 7;
  int n_scenes = 8;
  int n_frames = 60;
  int n_pairs = 500;  // per scene
  double train_fraction = 0.8;
  PinholeCamera camera;
  SceneConfig scene;
  TrajectoryConfig trajectory;
  ValidityThresholds thresholds;
  SearchParams search;

  void validate() const {
    if (n_scenes < 1) throw ConfigError("dataset: n_scenes must be >= 1");
    if (n_frames < 2) throw ConfigError("dataset: n_frames must be >= 2");
    if (n_pairs < 1) throw ConfigError("dataset: n_pairs must be >= 1");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) throw ConfigError("dataset: train_fraction in [0,1]");
    if (camera.rows < 8 || camera.cols < 8) throw ConfigError("dataset: resolution must be at least 8x8");
    thresholds.validate();
  }
};

struct LabeledPair {
  std::uint32_t pair_id = 0;
  std::uint32_t scene = 0;
  FramePair frames;
  PoseDelta delta;
  double tau_gt = 0.0;
  std::vector<float> cur_token;
  std::vector<float> ref_token;
};

/// One scene's stream: the generated scene, its trajectory and rendered frames.
struct SceneStream {
  SyntheticScene scene;
  Trajectory trajectory;
  std::vector<PointMapFrame> frames;
};

inline SceneStream make_stream(std::uint64_t seed, int index, int n_frames, const PinholeCamera& camera,
                               const SceneConfig& scene_cfg = {}, const TrajectoryConfig& traj_cfg = {}) {
  SceneStream s;
  const auto idx = static_cast<std::uint64_t>(index);
  s.scene = generate_scene(derive_seed(seed, "scene", idx), scene_cfg);
  s.trajectory = generate_trajectory(s.scene, derive_seed(seed, "traj", idx), n_frames, traj_cfg);
  s.frames.reserve(static_cast<std::size_t>(n_frames));
  for (int k = 0; k < n_frames; ++k) {
    s.frames.push_back(render_frame(s.scene, s.trajectory[static_cast<std::size_t>(k)].pose, camera,
                                    static_cast<std::uint32_t>(k)));
  }
  return s;
}

inline std::vector<float> to_float(const std::vector<double>& v) {
  return std::vector<float>(v.begin(), v.end());
}

/// Tokens for the ordered pair (current, reference): the current frame is
/// mapped into the reference camera with the relative pose.
inline std::pair<std::vector<float>, std::vector<float>> pair_tokens(const PointMapFrame& cur, const SE3Pose& cur_pose,
                                                                     const PointMapFrame& ref, const SE3Pose& ref_pose,
                                                                     const PinholeCamera& camera) {
  return {to_float(extract_descriptor(cur, camera, ref_pose.inverse() * cur_pose)),
          to_float(extract_descriptor(ref, camera))};
}

inline std::vector<LabeledPair> build_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  std::vector<LabeledPair> out;
  for (int s = 0; s < cfg.n_scenes; ++s) {
    const SceneStream stream = make_stream(cfg.seed, s, cfg.n_frames, cfg.camera, cfg.scene, cfg.trajectory);
    const auto pairs = sample_pairs(stream.trajectory, derive_seed(cfg.seed, "pairs", static_cast<std::uint64_t>(s)),
                                    static_cast<std::size_t>(cfg.n_pairs));
    for (const auto& p : pairs) {
      const auto& pose_i = stream.trajectory[p.i].pose;
      const auto& pose_j = stream.trajectory[p.j].pose;
      const auto label = label_pair(stream.frames[p.i], pose_i, stream.frames[p.j], pose_j, cfg.thresholds, cfg.search);
      LabeledPair lp;
      lp.pair_id = static_cast<std::uint32_t>(out.size());
      lp.scene = static_cast<std::uint32_t>(s);
      lp.frames = p;
      lp.delta = label.delta;
      lp.tau_gt = label.breakdown.tau_gt;
      std::tie(lp.cur_token, lp.ref_token) =
          pair_tokens(stream.frames[p.i], pose_i, stream.frames[p.j], pose_j, cfg.camera);
      out.push_back(std::move(lp));
    }
  }
  return out;
}

/// Number of scenes assigned to training: round(train_fraction * n_scenes).
inline int train_scene_count(int n_scenes, double train_fraction) {
  return static_cast<int>(std::lround(train_fraction * n_scenes));
}

inline TrainingSample to_sample(const LabeledPair& p) {
  return {std::vector<double>(p.ref_token.begin(), p.ref_token.end()),
          std::vector<double>(p.cur_token.begin(), p.cur_token.end()), p.tau_gt};
}

struct SplitSamples {
  std::vector<TrainingSample> train;
  std::vector<TrainingSample> eval;
};

/// Scenes [0, n_train) train, the rest evaluate.
inline SplitSamples split_by_scene(const std::vector<LabeledPair>& pairs, int n_train_scenes) {
  SplitSamples out;
  for (const auto& p : pairs) {
    (static_cast<int>(p.scene) < n_train_scenes ? out.train : out.eval).push_back(to_sample(p));
  }
  return out;
}

/// Counts per decile [0,0.1), ..., [0.9,1.0]; 1.0 falls in the last bin.
inline std::array<std::size_t, 10> label_histogram(const std::vector<LabeledPair>& pairs) {
  std::array<std::size_t, 10> h{};
  for (const auto& p : pairs) {
    const int b = std::clamp(static_cast<int>(std::floor(p.tau_gt * 10.0)), 0, 9);
    ++h[static_cast<std::size_t>(b)];
  }
  return h;
}

// Labels CSV plus sibling DESC v1 file ("DESC", u32 count, u32 dim, f32
// row-major). Each DESC row is [cur_token | ref_token].

inline constexpr const char* kLabelsCsvHeader = "pair_id,scene,frame_i,frame_j,rot_deg,trans_m,tau_gt";

inline std::string format_labels_csv(const std::vector<LabeledPair>& pairs) {
  std::ostringstream os;
  os << kLabelsCsvHeader << '\n';
  for (const auto& p : pairs) {
    os << p.pair_id << ',' << p.scene << ',' << p.frames.i << ',' << p.frames.j << ',' << io::fmt17(p.delta.rotation_deg)
       << ',' << io::fmt17(p.delta.translation_m) << ',' << io::fmt17(p.tau_gt) << '\n';
  }
  return os.str();
}

inline std::string format_desc(const std::vector<LabeledPair>& pairs) {
  const std::size_t half = pairs.empty() ? 0 : pairs.front().cur_token.size();
  std::ostringstream os(std::ios::binary);
  io::write_magic(os, "DESC");
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(pairs.size()));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(2 * half));
  for (const auto& p : pairs) {
    if (p.cur_token.size() != half || p.ref_token.size() != half) throw DataError("DESC: ragged descriptors");
    for (float v : p.cur_token) io::write_le<float>(os, v);
    for (float v : p.ref_token) io::write_le<float>(os, v);
  }
  return os.str();
}

inline void save_dataset(const std::filesystem::path& labels_csv, const std::filesystem::path& desc_bin,
                         const std::vector<LabeledPair>& pairs) {
  io::write_file_atomic(labels_csv, format_labels_csv(pairs));
  io::write_file_atomic(desc_bin, format_desc(pairs));
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  std::istringstream ss(s);
  T v{};
  ss >> v;
  if (ss.fail() || !ss.eof()) throw DataError(std::string("labels: bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace detail

inline std::vector<LabeledPair> parse_labels_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kLabelsCsvHeader) throw DataError("labels: unexpected header");
  std::vector<LabeledPair> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 7) throw DataError("labels: expected 7 columns");
    LabeledPair p;
    p.pair_id = detail::parse_number<std::uint32_t>(cells[0], "pair_id");
    p.scene = detail::parse_number<std::uint32_t>(cells[1], "scene");
    p.frames.i = detail::parse_number<std::uint32_t>(cells[2], "frame_i");
    p.frames.j = detail::parse_number<std::uint32_t>(cells[3], "frame_j");
    p.delta.rotation_deg = detail::parse_number<double>(cells[4], "rot_deg");
    p.delta.translation_m = detail::parse_number<double>(cells[5], "trans_m");
    p.tau_gt = detail::parse_number<double>(cells[6], "tau_gt");
    if (!(p.tau_gt >= 0.0 && p.tau_gt <= 1.0)) throw DataError("labels: tau_gt outside [0,1]");
    out.push_back(std::move(p));
  }
  return out;
}

/// Attaches DESC rows to parsed labels (row k belongs to label k).
inline void attach_descriptors(std::vector<LabeledPair>& pairs, const std::string& desc) {
  std::istringstream is(desc, std::ios::binary);
  io::expect_magic(is, "DESC", "DESC");
  const auto count = io::read_le<std::uint32_t>(is, "DESC");
  const auto dim = io::read_le<std::uint32_t>(is, "DESC");
  if (count != pairs.size()) throw DataError("DESC: row count does not match labels");
  if (dim % 2 != 0) throw DataError("DESC: odd row width");
  const std::size_t half = dim / 2;
  for (auto& p : pairs) {
    p.cur_token.resize(half);
    p.ref_token.resize(half);
    for (auto& v : p.cur_token) v = io::read_le<float>(is, "DESC");
    for (auto& v : p.ref_token) v = io::read_le<float>(is, "DESC");
  }
}

inline std::vector<LabeledPair> load_dataset(const std::filesystem::path& labels_csv,
                                             const std::filesystem::path& desc_bin) {
  auto pairs = parse_labels_csv(io::read_file(labels_csv));
  attach_descriptors(pairs, io::read_file(desc_bin));
  return pairs;
}

}  // namespace leangate
