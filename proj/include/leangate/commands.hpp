#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "leangate/checkpoint.hpp"
#include "leangate/config.hpp"
#include "leangate/dataset.hpp"
#include "leangate/errors.hpp"
#include "leangate/gating.hpp"
#include "leangate/metrics.hpp"
#include "leangate/pipeline.hpp"
#include "leangate/training.hpp"

namespace leangate::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Key registries, one per subcommand.

inline std::vector<KeySpec> camera_keys() {
  return {{"rows", "32", "pointmap rows"},
          {"cols", "32", "pointmap columns"},
          {"hfov_deg", "55", "horizontal field of view, degrees"}};
}

inline std::vector<KeySpec> scoring_keys() {
  return {{"window", "3", "correspondence search half-window, pixels"},
          {"tau_d", "0.1", "correspondence residual threshold, meters"},
          {"tau_c", "0.0", "confidence threshold"},
          {"tau_q", "1.5", "matching-quality threshold"}};
}

inline std::vector<KeySpec> concat(std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline std::vector<KeySpec> label_keys() {
  return concat(concat({{"seed", "7", "top-level random seed"},
                        {"out_dir", "out", "output directory for labels.csv and descriptors.desc"},
                        {"n_scenes", "8", "number of synthetic scenes"},
                        {"n_frames", "60", "frames rendered per scene"},
                        {"n_pairs", "500", "pairs sampled per scene"}},
                       camera_keys()),
                scoring_keys());
}

inline std::vector<KeySpec> train_keys() {
  return {{"seed", "7", "top-level random seed"},
          {"data_dir", "out", "directory holding labels.csv and descriptors.desc"},
          {"out_dir", "out", "output directory for model.greg and metrics"},
          {"epochs", "20", "total training epochs"},
          {"stop_after", "0", "stop once this many epochs are complete (0 runs all)"},
          {"resume", "", "checkpoint to resume from (empty starts fresh)"},
          {"batch_size", "32", "minibatch size"},
          {"lr_head", "0.003", "AdamW learning rate for the refinement head"},
          {"lr_projection", "0.001", "AdamW learning rate for the token projection"},
          {"weight_decay", "0.0001", "decoupled weight decay"},
          {"delta", "0.1", "Huber transition point"},
          {"iterations", "4", "latent refinement iterations K"},
          {"d_model", "16", "token width"},
          {"train_fraction", "0.8", "share of scenes used for training"}};
}

inline std::vector<KeySpec> gate_keys() {
  return concat(concat({{"seed", "7", "top-level random seed"},
                        {"out_dir", "gate", "output directory"},
                        {"policy", "student_gate", "dense | stride(n) | teacher_gate | student_gate"},
                        {"checkpoint", "out/model.greg", "student checkpoint (student_gate only)"},
                        {"tau_keep", "0.5", "student keep threshold"},
                        {"omega_k", "0.33", "teacher keyframe threshold"},
                        {"inclusive", "true", "student keeps on tau >= tau_keep (false: tau > tau_keep)"},
                        {"stream", "6", "scene index of the synthetic stream"},
                        {"n_frames", "150", "frames in the synthetic stream"},
                        {"pmap_dir", "", "read the stream from *.pmap files plus gt.tum in this directory"},
                        {"compare_teacher", "true", "also run the teacher gate and report agreement"},
                        {"track_noise_m", "0.01", "tracker translation noise per kept frame, meters"},
                        {"track_noise_deg", "0.5", "tracker rotation noise per kept frame, degrees"},
                        {"pixel_stride", "2", "pixel subsampling for fused point sets"}},
                       camera_keys()),
                scoring_keys());
}

inline std::vector<KeySpec> eval_traj_keys() {
  return {{"est", "gate/est.tum", "estimated trajectory (TUM)"},
          {"gt", "gate/gt.tum", "ground-truth trajectory (TUM)"},
          {"align", "sim3", "alignment: sim3 | se3 | none"},
          {"max_dt", "0.02", "timestamp association window, seconds"},
          {"out_dir", "gate", "output directory"}};
}

inline std::vector<KeySpec> eval_recon_keys() {
  return {{"pred", "gate/pred_points.xyz", "predicted point set"},
          {"ref", "gate/ref_points.xyz", "reference point set"},
          {"near", "0.02", "first F-score threshold, meters"},
          {"far", "0.05", "second F-score threshold, meters"},
          {"out_dir", "gate", "output directory"}};
}

inline std::vector<KeySpec> report_keys() {
  const CostModel m = calibrate_cost_model();
  return {{"run_dir", "gate", "gate output directory of the evaluated run"},
          {"baseline_dir", "dense", "gate output directory of the dense baseline"},
          {"out_dir", "report", "output directory"},
          {"align", "sim3", "alignment: sim3 | se3 | none"},
          {"max_dt", "0.02", "timestamp association window, seconds"},
          {"c_gate", io::fmt17(m.c_gate), "TFLOPs per gated frame"},
          {"c_track", io::fmt17(m.c_track), "TFLOPs per kept frame, tracker"},
          {"c_backend", io::fmt17(m.c_backend), "TFLOPs per kept frame, backend"}};
}

// Shared helpers.

struct Io {
  std::ostream& out;
  std::ostream& err;
  bool color = false;

  std::string ok(const std::string& s) const { return color ? "\033[32m" + s + "\033[0m" : s; }
};

inline bool use_color(std::ostream& out) {
  if (std::getenv("NO_COLOR") != nullptr) return false;
  return &out == &std::cout && ::isatty(STDOUT_FILENO) != 0;
}

inline fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir);
  return fs::path(dir);
}

inline void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw DataError("missing " + what + ": " + p.string());
}

/// Metrics are rounded to 1e-9 before serialization.
inline double rounded(double v) { return std::round(v * 1e9) / 1e9; }

inline ordered_json config_json(const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : cfg.values()) j[k] = v;
  return j;
}

inline void write_json(const fs::path& p, const ordered_json& j) { io::write_file_atomic(p, j.dump(2) + "\n"); }

inline PinholeCamera camera_from(const RunConfig& cfg) {
  PinholeCamera cam;
  cam.rows = cfg.int32("rows");
  cam.cols = cfg.int32("cols");
  cam.hfov_deg = cfg.real("hfov_deg");
  if (cam.rows < 8 || cam.cols < 8) throw ConfigError("resolution must be at least 8x8");
  if (!(cam.hfov_deg > 0.0 && cam.hfov_deg < 180.0)) throw ConfigError("hfov_deg must lie in (0,180)");
  return cam;
}

inline ValidityThresholds thresholds_from(const RunConfig& cfg) {
  ValidityThresholds t;
  t.tau_d = cfg.real("tau_d");
  t.tau_c = cfg.real("tau_c");
  t.tau_q = cfg.real("tau_q");
  t.validate();
  return t;
}

inline SearchParams search_from(const RunConfig& cfg) {
  SearchParams s;
  s.window = cfg.int32("window");
  if (s.window < 0) throw ConfigError("window must be >= 0");
  return s;
}

inline AlignConfig align_from(const RunConfig& cfg) {
  AlignConfig a;
  const std::string& m = cfg.str("align");
  if (m == "sim3") a.mode = AlignMode::sim3;
  else if (m == "se3") a.mode = AlignMode::se3;
  else if (m == "none") a.mode = AlignMode::none;
  else throw ConfigError("align must be sim3, se3 or none");
  a.max_dt = cfg.real("max_dt");
  if (!(a.max_dt >= 0.0)) throw ConfigError("max_dt must be >= 0");
  return a;
}

// Subcommands.

inline int cmd_label(const RunConfig& cfg, const Io& io_) {
  DatasetConfig dc;
  dc.seed = cfg.u64("seed");
  dc.n_scenes = cfg.int32("n_scenes");
  dc.n_frames = cfg.int32("n_frames");
  dc.n_pairs = cfg.int32("n_pairs");
  dc.camera = camera_from(cfg);
  dc.thresholds = thresholds_from(cfg);
  dc.search = search_from(cfg);
  dc.validate();
  const fs::path dir = ensure_dir(cfg.str("out_dir"));
  const auto pairs = build_dataset(dc);
  save_dataset(dir / "labels.csv", dir / "descriptors.desc", pairs);
  const auto hist = label_histogram(pairs);

  ordered_json rep;
  rep["command"] = "label";
  rep["config"] = config_json(cfg);
  rep["n_labels"] = pairs.size();
  rep["descriptor_dim"] = pairs.empty() ? 0 : pairs.front().cur_token.size();
  rep["histogram"] = hist;
  write_json(dir / "label_report.json", rep);

  io_.out << "labels: " << pairs.size() << " pairs -> " << (dir / "labels.csv").string() << "\n";
  io_.out << "tau_gt histogram:\n";
  for (std::size_t b = 0; b < hist.size(); ++b) {
    const double share = pairs.empty() ? 0.0 : static_cast<double>(hist[b]) / static_cast<double>(pairs.size());
    io_.out << "  [" << io::fixed(b / 10.0, 1) << "," << io::fixed((b + 1) / 10.0, 1) << (b == 9 ? "] " : ") ")
            << std::string(static_cast<std::size_t>(std::lround(share * 50.0)), '#') << " " << hist[b] << "\n";
  }
  io_.out << io_.ok("done") << "\n";
  return 0;
}

inline int cmd_train(const RunConfig& cfg, const Io& io_) {
  TrainConfig tc;
  tc.seed = cfg.u64("seed");
  tc.epochs = cfg.int32("epochs");
  tc.stop_after = cfg.int32("stop_after");
  tc.batch_size = cfg.int32("batch_size");
  tc.lr_head = cfg.real("lr_head");
  tc.lr_projection = cfg.real("lr_projection");
  tc.weight_decay = cfg.real("weight_decay");
  tc.delta = cfg.real("delta");
  tc.iterations = cfg.int32("iterations");
  tc.validate();
  const double train_fraction = cfg.real("train_fraction");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("train_fraction must lie in (0,1]");
  ModelShape shape;
  shape.d_model = cfg.int32("d_model");
  shape.iterations = tc.iterations;
  if (shape.d_model < 1) throw ConfigError("d_model must be >= 1");

  const fs::path data = cfg.str("data_dir");
  require_file(data / "labels.csv", "dataset");
  require_file(data / "descriptors.desc", "dataset");
  const auto pairs = load_dataset(data / "labels.csv", data / "descriptors.desc");
  if (pairs.empty()) throw DataError("dataset is empty");
  std::uint32_t n_scenes = 0;
  for (const auto& p : pairs) n_scenes = std::max(n_scenes, p.scene + 1);
  const int n_train = train_scene_count(static_cast<int>(n_scenes), train_fraction);
  const auto split = split_by_scene(pairs, n_train);
  if (split.train.empty()) throw DataError("training split is empty");
  const fs::path dir = ensure_dir(cfg.str("out_dir"));

  const auto log_epoch = [&](const EpochMetrics& m) {
    io_.out << "epoch " << m.epoch << "  loss " << io::fixed(m.train_loss, 6) << "  train MAE "
            << io::fixed(m.train.mae, 4) << "  eval MAE " << io::fixed(m.eval.mae, 4) << "\n";
  };
  TrainResult res;
  if (const std::string resume = cfg.str("resume"); !resume.empty()) {
    require_file(resume, "checkpoint");
    auto ck = load_checkpoint(resume);
    if (!ck.optimizer) throw DataError("checkpoint has no optimizer state to resume from");
    if (ck.model.shape.descriptor_dim != static_cast<int>(split.train.front().ref_token.size())) {
      throw DataError("checkpoint descriptor width does not match the dataset");
    }
    res = train(std::move(ck.model), std::move(*ck.optimizer), split.train, split.eval, tc, log_epoch);
  } else {
    res = train_from_scratch(split.train, split.eval, tc, shape, log_epoch);
  }
  save_checkpoint(dir / "model.greg", res.model, &res.optimizer);

  std::ostringstream metrics;
  metrics << "epoch,train_loss,train_mae,train_rmse,eval_mae,eval_rmse\n";
  for (const auto& m : res.history) {
    metrics << m.epoch << ',' << io::fmt17(m.train_loss) << ',' << io::fmt17(m.train.mae) << ','
            << io::fmt17(m.train.rmse) << ',' << io::fmt17(m.eval.mae) << ',' << io::fmt17(m.eval.rmse) << '\n';
  }
  io::write_file_atomic(dir / "train_metrics.csv", metrics.str());

  std::ostringstream preds;
  preds << "pair_id,scene,tau_gt,tau_pred\n";
  double abs_sum = 0.0, sq_sum = 0.0;
  std::size_t n_eval = 0;
  for (const auto& p : pairs) {
    if (static_cast<int>(p.scene) < n_train) continue;
    const std::string pred_text = io::fmt17(predict_tokens(res.model, to_sample(p)));
    preds << p.pair_id << ',' << p.scene << ',' << io::fmt17(p.tau_gt) << ',' << pred_text << '\n';
    const double e = std::stod(pred_text) - p.tau_gt;
    abs_sum += std::abs(e);
    sq_sum += e * e;
    ++n_eval;
  }
  io::write_file_atomic(dir / "eval_predictions.csv", preds.str());
  const double eval_mae = n_eval ? abs_sum / static_cast<double>(n_eval) : 0.0;
  const double eval_rmse = n_eval ? std::sqrt(sq_sum / static_cast<double>(n_eval)) : 0.0;

  ordered_json rep;
  rep["command"] = "train";
  rep["config"] = config_json(cfg);
  rep["n_train"] = split.train.size();
  rep["n_eval"] = split.eval.size();
  rep["parameter_count"] = res.model.params.size();
  rep["epochs_completed"] = res.optimizer.epoch;
  rep["eval_mae"] = rounded(eval_mae);
  rep["eval_rmse"] = rounded(eval_rmse);
  write_json(dir / "train_report.json", rep);
  io_.out << "final eval MAE " << io::fixed(eval_mae, 4) << "  RMSE " << io::fixed(eval_rmse, 4) << " over " << n_eval
          << " held-out pairs\n"
          << io_.ok("done") << "\n";
  return 0;
}

struct GateStream {
  std::vector<PointMapFrame> frames;
  Trajectory trajectory;
};

/// Reads every *.pmap file of `dir` in name order plus `dir`/gt.tum.
inline GateStream load_pmap_stream(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("missing frame directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pmap") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require_file(dir / "gt.tum", "stream trajectory");
  GateStream s;
  s.trajectory = load_tum(dir / "gt.tum");
  for (std::size_t k = 0; k < files.size(); ++k) s.frames.push_back(load_pmap(files[k], static_cast<std::uint32_t>(k)));
  if (s.frames.empty()) throw DataError("no .pmap frames in " + dir.string());
  if (s.frames.size() != s.trajectory.size()) throw DataError("frame count does not match gt.tum");
  return s;
}

inline int cmd_gate(const RunConfig& cfg, const Io& io_) {
  PolicyConfig pc;
  pc.tau_keep = cfg.real("tau_keep");
  pc.omega_k = cfg.real("omega_k");
  pc.inclusive = cfg.flag("inclusive");
  pc = parse_policy(cfg.str("policy"), pc);
  const std::uint64_t seed = cfg.u64("seed");
  const PinholeCamera camera = camera_from(cfg);
  const ValidityThresholds thr = thresholds_from(cfg);
  const SearchParams search = search_from(cfg);
  const int n_frames = cfg.int32("n_frames");
  const int stream_index = cfg.int32("stream");
  const int pixel_stride = cfg.int32("pixel_stride");
  if (pixel_stride < 1) throw ConfigError("pixel_stride must be >= 1");
  TrackingNoise noise;
  noise.translation_m = cfg.real("track_noise_m");
  noise.rotation_deg = cfg.real("track_noise_deg");
  if (!(noise.translation_m >= 0.0 && noise.rotation_deg >= 0.0)) throw ConfigError("tracking noise must be >= 0");

  std::optional<GateRegressor> model;
  if (pc.kind == PolicyKind::student_gate) {
    const fs::path ck = cfg.str("checkpoint");
    require_file(ck, "checkpoint");
    model = load_checkpoint(ck).model;
  }
  GateStream stream;
  if (const std::string pmap_dir = cfg.str("pmap_dir"); !pmap_dir.empty()) {
    stream = load_pmap_stream(pmap_dir);
  } else {
    if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
    if (stream_index < 0) throw ConfigError("stream must be >= 0");
    if (n_frames == 1) {
      auto s = make_stream(seed, stream_index, 2, camera);
      stream.frames = {s.frames.front()};
      stream.trajectory.push_back(s.trajectory[0]);
    } else {
      auto s = make_stream(seed, stream_index, n_frames, camera);
      stream.frames = std::move(s.frames);
      stream.trajectory = std::move(s.trajectory);
    }
  }
  for (const auto& f : stream.frames) {
    if (f.rows() != camera.rows || f.cols() != camera.cols) throw DataError("frame resolution does not match rows/cols");
  }
  const std::size_t n = stream.frames.size();
  const auto teacher = teacher_scorer(stream.frames, stream.trajectory, thr, search);
  PairScorer scorer;
  if (pc.kind == PolicyKind::teacher_gate) scorer = teacher;
  if (pc.kind == PolicyKind::student_gate) scorer = student_scorer(*model, camera, stream.frames, stream.trajectory);
  const auto decisions = run_policy(n, pc, scorer);

  std::optional<double> agreement;
  if (cfg.flag("compare_teacher")) {
    PolicyConfig tc = pc;
    tc.kind = PolicyKind::teacher_gate;
    agreement = pc.kind == PolicyKind::teacher_gate ? 1.0 : agreement_rate(decisions, run_policy(n, tc, teacher));
  }

  const auto est = simulate_tracking(stream.trajectory, decisions, derive_seed(seed, "tracking"), noise);
  std::vector<SE3Pose> gt_poses;
  for (const auto& sp : stream.trajectory) gt_poses.push_back(sp.pose);
  const auto pred = fuse_points(stream.frames, est.world_poses, kept_mask(decisions), pixel_stride);
  const auto ref = fuse_points(stream.frames, gt_poses, std::vector<bool>(n, true), pixel_stride);

  const fs::path dir = ensure_dir(cfg.str("out_dir"));
  io::write_file_atomic(dir / "decisions.csv", format_decisions_csv(decisions));
  save_tum(dir / "gt.tum", stream.trajectory);
  save_tum(dir / "est.tum", est.trajectory);
  io::write_file_atomic(dir / "pred_points.xyz", format_xyz(pred));
  io::write_file_atomic(dir / "ref_points.xyz", format_xyz(ref));

  ordered_json rep;
  rep["command"] = "gate";
  rep["config"] = config_json(cfg);
  rep["policy"] = pc.name();
  rep["n_frames"] = n;
  rep["n_kept"] = kept_count(decisions);
  rep["kept_fraction"] = rounded(kept_fraction(decisions));
  rep["downsample"] = rounded(downsample_factor(decisions));
  rep["teacher_agreement"] = agreement ? ordered_json(rounded(*agreement)) : ordered_json(nullptr);
  write_json(dir / "gate_report.json", rep);

  io_.out << pc.name() << ": kept " << kept_count(decisions) << " of " << n << " frames (fraction "
          << io::fixed(kept_fraction(decisions), 4) << ", downsample " << io::fixed(downsample_factor(decisions), 2)
          << "x)\n";
  if (agreement) io_.out << "agreement with teacher_gate: " << io::fixed(100.0 * *agreement, 1) << "%\n";
  io_.out << io_.ok("done") << "\n";
  return 0;
}

inline ordered_json ate_json(const AteReport& a) {
  ordered_json j;
  j["ate_rmse_cm"] = rounded(a.rmse_cm);
  j["ate_mean_cm"] = rounded(a.mean_cm);
  j["ate_max_cm"] = rounded(a.max_cm);
  j["n_matched"] = a.n_matched;
  j["scale"] = rounded(a.sim3.scale());
  return j;
}

inline ordered_json recon_json(const ReconReport& r) {
  ordered_json j;
  j["acc_m"] = rounded(r.acc_m);
  j["comp_m"] = rounded(r.comp_m);
  j["chamfer_m"] = rounded(r.chamfer_m);
  j["f_2cm"] = rounded(r.f2);
  j["f_5cm"] = rounded(r.f5);
  return j;
}

/// Flat key,value CSV of the scalar members of a JSON object.
inline std::string json_csv(const ordered_json& j) {
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) os << k << ',' << v.dump() << '\n';
  }
  return os.str();
}

inline int cmd_eval_traj(const RunConfig& cfg, const Io& io_) {
  const AlignConfig ac = align_from(cfg);
  require_file(cfg.str("est"), "estimated trajectory");
  require_file(cfg.str("gt"), "ground-truth trajectory");
  const auto a = ate(load_tum(cfg.str("est")), load_tum(cfg.str("gt")), ac);
  const fs::path dir = ensure_dir(cfg.str("out_dir"));
  ordered_json rep = ate_json(a);
  io::write_file_atomic(dir / "eval-traj_report.csv", json_csv(rep));
  rep["command"] = "eval-traj";
  rep["config"] = config_json(cfg);
  write_json(dir / "eval-traj_report.json", rep);
  io_.out << "ATE RMSE " << io::fixed(a.rmse_cm, 3) << " cm over " << a.n_matched << " poses\n" << io_.ok("done") << "\n";
  return 0;
}

inline int cmd_eval_recon(const RunConfig& cfg, const Io& io_) {
  ReconThresholds thr;
  thr.near = cfg.real("near");
  thr.far = cfg.real("far");
  if (!(thr.near > 0.0 && thr.far > 0.0)) throw ConfigError("F-score thresholds must be > 0");
  require_file(cfg.str("pred"), "predicted point set");
  require_file(cfg.str("ref"), "reference point set");
  const auto r = recon_metrics(parse_xyz(io::read_file(cfg.str("pred"))), parse_xyz(io::read_file(cfg.str("ref"))), thr);
  const fs::path dir = ensure_dir(cfg.str("out_dir"));
  ordered_json rep = recon_json(r);
  io::write_file_atomic(dir / "eval-recon_report.csv", json_csv(rep));
  rep["command"] = "eval-recon";
  rep["config"] = config_json(cfg);
  write_json(dir / "eval-recon_report.json", rep);
  io_.out << "Chamfer " << io::fixed(r.chamfer_m, 4) << " m  F@near " << io::fixed(r.f2, 4) << "  F@far "
          << io::fixed(r.f5, 4) << "\n"
          << io_.ok("done") << "\n";
  return 0;
}

/// Metrics of one gate output directory.
inline ordered_json evaluate_run(const fs::path& dir, const AlignConfig& ac, const CostModel& cost) {
  for (const char* f : {"decisions.csv", "gt.tum", "est.tum", "pred_points.xyz", "ref_points.xyz"}) {
    require_file(dir / f, "run input");
  }
  const auto decisions = parse_decisions_csv(io::read_file(dir / "decisions.csv"));
  const auto a = ate(load_tum(dir / "est.tum"), load_tum(dir / "gt.tum"), ac);
  const auto r = recon_metrics(parse_xyz(io::read_file(dir / "pred_points.xyz")),
                               parse_xyz(io::read_file(dir / "ref_points.xyz")));
  const auto c = account_cost(decisions, cost);
  ordered_json j;
  j["policy"] = decisions.front().policy;
  j["n_frames"] = decisions.size();
  j["n_kept"] = kept_count(decisions);
  j["downsample"] = rounded(downsample_factor(decisions));
  j["ate_rmse_cm"] = rounded(a.rmse_cm);
  j["acc_m"] = rounded(r.acc_m);
  j["comp_m"] = rounded(r.comp_m);
  j["chamfer_m"] = rounded(r.chamfer_m);
  j["f_2cm"] = rounded(r.f2);
  j["f_5cm"] = rounded(r.f5);
  j["tflops_gate"] = rounded(c.gate_tflops);
  j["tflops_slam"] = rounded(c.slam_tflops);
  j["tflops_total"] = rounded(c.total_tflops);
  return j;
}

inline constexpr const char* kReportKeys[] = {"ate_rmse_cm", "chamfer_m", "f_2cm", "f_5cm", "tflops_total"};

inline int cmd_report(const RunConfig& cfg, const Io& io_) {
  const AlignConfig ac = align_from(cfg);
  CostModel cost;
  cost.c_gate = cfg.real("c_gate");
  cost.c_track = cfg.real("c_track");
  cost.c_backend = cfg.real("c_backend");
  cost.validate();
  const auto run = evaluate_run(cfg.str("run_dir"), ac, cost);
  const auto base = evaluate_run(cfg.str("baseline_dir"), ac, cost);
  ordered_json rep;
  rep["command"] = "report";
  rep["config"] = config_json(cfg);
  for (const char* k : kReportKeys) rep[k] = run[k];
  rep["run"] = run;
  rep["baseline"] = base;
  ordered_json delta;
  std::ostringstream csv;
  csv << "metric,run,baseline,delta_percent\n";
  for (const char* k : kReportKeys) {
    const double d = delta_percent(run[k].get<double>(), base[k].get<double>());
    delta[k] = std::isfinite(d) ? ordered_json(rounded(d)) : ordered_json(nullptr);
    csv << k << ',' << run[k].dump() << ',' << base[k].dump() << ',' << delta[k].dump() << '\n';
  }
  rep["delta_percent"] = delta;
  const fs::path dir = ensure_dir(cfg.str("out_dir"));
  write_json(dir / "report.json", rep);
  io::write_file_atomic(dir / "report.csv", csv.str());
  io_.out << "metric          run          baseline     delta%\n";
  for (const char* k : kReportKeys) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %12.6f %12.6f %s\n", k, run[k].get<double>(), base[k].get<double>(),
                  delta[k].is_null() ? "n/a" : io::fixed(delta[k].get<double>(), 2).c_str());
    io_.out << line;
  }
  io_.out << io_.ok("done") << "\n";
  return 0;
}

// Entry point.

struct Subcommand {
  std::string name;
  std::string description;
  std::vector<KeySpec> keys;
  int (*run)(const RunConfig&, const Io&);
};

inline std::vector<Subcommand> subcommands() {
  return {{"label", "generate scenes, sample pairs and write teacher labels", label_keys(), cmd_label},
          {"train", "train the gate regressor on a labeled dataset", train_keys(), cmd_train},
          {"gate", "run a gating policy over a frame stream", gate_keys(), cmd_gate},
          {"eval-traj", "ATE of an estimated trajectory", eval_traj_keys(), cmd_eval_traj},
          {"eval-recon", "reconstruction accuracy, completeness, Chamfer and F-scores", eval_recon_keys(),
           cmd_eval_recon},
          {"report", "metrics and cost of a run against the dense baseline", report_keys(), cmd_report}};
}

/// Runs the command line; returns 0 on success, 1 on usage or config errors
/// and 2 on data errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const auto subs = subcommands();
  CLI::App app("Frame gating benchmark: labels, student training, gating and evaluation.", "leangate");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  struct Parsed {
    std::string config_file;
    std::map<std::string, std::string> flags;
  };
  std::vector<Parsed> parsed(subs.size());
  std::vector<CLI::App*> apps;
  for (std::size_t s = 0; s < subs.size(); ++s) {
    auto* sub = app.add_subcommand(subs[s].name, subs[s].description);
    sub->add_option("--config", parsed[s].config_file, "key=value config file (defaults < file < flags)");
    for (const auto& key : subs[s].keys) {
      const std::string def = key.default_value.empty() ? "\"\"" : key.default_value;
      sub->add_option(key.flag(), parsed[s].flags[key.name],
                      key.help + " [key " + key.name + ", default " + def + "]");
    }
    apps.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  const Io io_{out, err, use_color(out)};
  for (std::size_t s = 0; s < subs.size(); ++s) {
    if (!apps[s]->parsed()) continue;
    try {
      RunConfig cfg(subs[s].keys);
      if (!parsed[s].config_file.empty()) cfg.apply_file(parsed[s].config_file);
      for (const auto& key : subs[s].keys) {
        if (apps[s]->count(key.flag()) > 0) cfg.set(key.name, parsed[s].flags[key.name]);
      }
      return subs[s].run(cfg, io_);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}

}  // namespace leangate::cli
