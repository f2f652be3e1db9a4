#include <gtest/gtest.h>

#include <map>
#include <set>

#include "leangate/dataset.hpp"
#include "leangate/oracle.hpp"
#include "leangate/scene.hpp"
#include "score_oracle.hpp"
#include "support.hpp"

using namespace leangate;
using namespace testing_support;

namespace {

SE3Pose looking_down(const Vec3& position) {
  Mat3 R;
  R.col(0) = Vec3(1, 0, 0);
  R.col(1) = Vec3(0, -1, 0);
  R.col(2) = Vec3(0, 0, -1);
  return {R, position};
}

}  // namespace

TEST(GenerateScene, DeterministicPerSeed) {
  EXPECT_EQ(generate_scene(0), generate_scene(0));
  EXPECT_NE(generate_scene(0).elevation, generate_scene(1).elevation);
}

TEST(GenerateScene, FlatModeZeroesElevation) {
  SceneConfig cfg;
  cfg.flat = true;
  const auto s = generate_scene(3, cfg);
  for (double h : s.elevation) EXPECT_EQ(h, 0.0);
}

TEST(GenerateScene, FieldsFiniteAndAlbedoInRange) {
  const auto s = generate_scene(5);
  for (double h : s.elevation) EXPECT_TRUE(std::isfinite(h));
  for (double a : s.albedo) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  SceneConfig bad;
  bad.extent = 0.0;
  EXPECT_THROW(generate_scene(0, bad), ConfigError);
}

TEST(GenerateTrajectory, ConstructionPostconditions) {
  const auto s = generate_scene(2);
  const auto t = generate_trajectory(s, 9, 60);
  ASSERT_EQ(t.size(), 60u);
  EXPECT_EQ(t[0].timestamp, 0.0);
  const auto u = generate_trajectory(s, 9, 60);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t[k].timestamp, u[k].timestamp);
    EXPECT_EQ(t[k].pose.translation(), u[k].pose.translation());
    EXPECT_EQ(t[k].pose.rotation().coeffs(), u[k].pose.rotation().coeffs());
  }
  EXPECT_THROW(generate_trajectory(s, 9, 1), ConfigError);
}

TEST(GenerateTrajectory, StepBoundsHoldAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = generate_scene(seed);
    for (int n : {30, 60, 150}) {
      const auto t = generate_trajectory(s, seed * 31 + 1, n);
      for (std::size_t k = 1; k < t.size(); ++k) {
        const auto d = pose_delta(t[k - 1].pose, t[k].pose);
        EXPECT_LT(d.rotation_deg, 10.0);
        EXPECT_LT(d.translation_m, 0.3);
        EXPECT_GT(t[k].timestamp, t[k - 1].timestamp);
      }
    }
  }
}

TEST(RenderFrame, StraightDownOverFlatFloor) {
  SceneConfig cfg;
  cfg.flat = true;
  const auto s = generate_scene(1, cfg);
  const PinholeCamera cam;
  const auto f = render_frame(s, looking_down(Vec3(0, 0, 1.5)), cam);
  EXPECT_EQ(f.valid_count(), f.pixel_count());
  for (int r = 0; r < cam.rows; ++r) {
    for (int c = 0; c < cam.cols; ++c) {
      EXPECT_NEAR(f.confidence(r, c), cam.ray(r, c).z(), 1e-9);
      EXPECT_NEAR(f.points(r, c).z(), 1.5, 1e-6);
    }
  }
  EXPECT_GT(f.confidence(cam.rows / 2, cam.cols / 2), 0.999);
}

TEST(RenderFrame, HorizonGrazingViewHasEscapedRays) {
  const auto s = generate_scene(1);
  const auto f = render_frame(s, look_pose(Vec3(0, 0, 4.0), 0.3, 0.0), PinholeCamera{});
  EXPECT_GT(f.valid_count(), 0u);
  EXPECT_LT(f.valid_count(), f.pixel_count());
}

TEST(RenderFrame, DeterministicAndChannelRanges) {
  const auto s = generate_scene(4);
  const auto t = generate_trajectory(s, 4, 10);
  const PinholeCamera cam;
  for (const auto& sp : t) {
    const auto a = render_frame(s, sp.pose, cam);
    const auto b = render_frame(s, sp.pose, cam);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.confidence, b.confidence);
    EXPECT_EQ(a.quality, b.quality);
    EXPECT_EQ(a.valid, b.valid);
    EXPECT_NO_THROW(a.validate());
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
      if (!a.is_valid(i)) continue;
      EXPECT_GE(a.quality[i], 1.0);
      EXPECT_LE(a.quality[i], 3.0);
      EXPECT_GT(a.points[i].z(), 0.0);
    }
  }
  PinholeCamera tiny;
  tiny.rows = 4;
  EXPECT_THROW(render_frame(s, t[0].pose, tiny), ConfigError);
}

TEST(RenderFrame, WorldConventionMatchesCameraFrameTransformed) {
  const auto s = generate_scene(6);
  const auto t = generate_trajectory(s, 6, 3);
  const auto cam_frame = render_frame(s, t[1].pose, PinholeCamera{}, 0, FrameConvention::camera);
  const auto world_frame = render_frame(s, t[1].pose, PinholeCamera{}, 0, FrameConvention::world);
  const auto moved = cam_frame.transformed(t[1].pose);
  for (std::size_t i = 0; i < moved.pixel_count(); ++i) {
    if (moved.is_valid(i)) {
      EXPECT_LT((moved.points[i] - world_frame.points[i]).norm(), 1e-9);
    }
  }
}

TEST(SamplePairs, TwoFrameTrajectory) {
  const auto s = generate_scene(0);
  const auto t = generate_trajectory(s, 0, 2);
  const auto pairs = sample_pairs(t, 1, 10);
  EXPECT_EQ(pairs.size(), 2u);
  for (const auto& p : pairs) {
    EXPECT_TRUE((p == FramePair{0, 1}) || (p == FramePair{1, 0}));
  }
}

TEST(SamplePairs, DeterministicAndNotTemporal) {
  const auto s = generate_scene(0);
  const auto t = generate_trajectory(s, 0, 60);
  const auto a = sample_pairs(t, 5, 500);
  EXPECT_EQ(a, sample_pairs(t, 5, 500));
  EXPECT_NE(a, sample_pairs(t, 6, 500));
  EXPECT_EQ(a.size(), 500u);
  std::set<int> gaps;
  bool both_orders = false;
  for (const auto& p : a) {
    EXPECT_NE(p.i, p.j);
    gaps.insert(std::abs(static_cast<int>(p.i) - static_cast<int>(p.j)));
    both_orders = both_orders || p.i < p.j;
  }
  EXPECT_GE(gaps.size(), 3u);
  EXPECT_TRUE(both_orders);
}

TEST(SamplePairs, Errors) {
  Trajectory one;
  one.push_back({0.0, SE3Pose()});
  EXPECT_THROW(sample_pairs(one, 0, 5), DataError);
  const auto t = generate_trajectory(generate_scene(0), 0, 5);
  EXPECT_THROW(sample_pairs(t, 0, 0), ConfigError);
}

TEST(LabelPair, SameFrameIsZero) {
  const auto s = generate_scene(2);
  const auto t = generate_trajectory(s, 2, 5);
  const auto f = render_frame(s, t[2].pose, PinholeCamera{});
  const auto l = label_pair(f, t[2].pose, f, t[2].pose);
  EXPECT_EQ(l.breakdown.tau_gt, 0.0);
  EXPECT_EQ(l.delta.rotation_deg, 0.0);
}

TEST(LabelPair, OppositeViewsAreDisjoint) {
  const auto s = generate_scene(2);
  const PinholeCamera cam;
  const SE3Pose a = look_pose(Vec3(-1.5, 0, 1.4), std::numbers::pi, deg2rad(40.0));
  const SE3Pose b = look_pose(Vec3(1.5, 0, 1.4), 0.0, deg2rad(40.0));
  const auto l = label_pair(render_frame(s, a, cam), a, render_frame(s, b, cam), b);
  EXPECT_EQ(l.breakdown.tau_gt, 1.0);
}

TEST(LabelPair, HandCaseComposition) {
  const auto [fi, fj] = hand_case_3x3();
  const auto l = label_pair(fi, SE3Pose(), fj, SE3Pose());
  EXPECT_EQ(l.breakdown.tau_gt, 5.0 / 9.0);
}

TEST(LabelPair, ResolutionMismatch) {
  PointMapFrame a(0, 3, 3), b(0, 4, 4);
  EXPECT_THROW(label_pair(a, SE3Pose(), b, SE3Pose()), DataError);
}

TEST(LabelDistribution, BroadAndTrendingOnDefaultDataset) {
  const auto pairs = build_dataset(DatasetConfig{});
  ASSERT_GE(pairs.size(), 500u);
  std::vector<std::pair<double, double>> rows;  // (translation, tau)
  std::array<std::size_t, 10> deciles{};
  double lo = 1.0, hi = 0.0;
  for (const auto& p : pairs) {
    EXPECT_GE(p.tau_gt, 0.0);
    EXPECT_LE(p.tau_gt, 1.0);
    lo = std::min(lo, p.tau_gt);
    hi = std::max(hi, p.tau_gt);
    ++deciles[static_cast<std::size_t>(std::min(9, static_cast<int>(p.tau_gt * 10.0)))];
    rows.emplace_back(p.delta.translation_m, p.tau_gt);
  }
  EXPECT_LE(lo, 0.05);
  EXPECT_GE(hi, 0.95);
  for (std::size_t c : deciles) EXPECT_LT(c, pairs.size() / 2) << "labels concentrated in one decile";

  std::sort(rows.begin(), rows.end());
  const std::size_t bins = 5;
  std::vector<double> means;
  for (std::size_t b = 0; b < bins; ++b) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = b * rows.size() / bins; k < (b + 1) * rows.size() / bins; ++k, ++n) sum += rows[k].second;
    means.push_back(sum / static_cast<double>(n));
  }
  int inversions = 0;
  for (std::size_t b = 1; b < means.size(); ++b) inversions += means[b] < means[b - 1] ? 1 : 0;
  EXPECT_LE(inversions, 1);
}

TEST(LabelDistribution, SingleSceneIsNonDegenerate) {
  const auto stream = make_stream(7, 0, 60, PinholeCamera{});
  const auto pairs = sample_pairs(stream.trajectory, 7, 500);
  std::array<int, 10> deciles{};
  for (const auto& p : pairs) {
    const double tau = label_pair(stream.frames[p.i], stream.trajectory[p.i].pose, stream.frames[p.j],
                                  stream.trajectory[p.j].pose)
                           .breakdown.tau_gt;
    ++deciles[static_cast<std::size_t>(std::min(9, static_cast<int>(tau * 10.0)))];
  }
  for (int c : deciles) EXPECT_LT(c, 250);
  EXPECT_GE(std::count_if(deciles.begin(), deciles.end(), [](int c) { return c > 0; }), 5);
}

TEST(Dataset, SplitHistogramAndFileRoundTrip) {
  DatasetConfig dc;
  dc.n_scenes = 3;
  dc.n_frames = 12;
  dc.n_pairs = 20;
  const auto pairs = build_dataset(dc);
  ASSERT_EQ(pairs.size(), 60u);
  EXPECT_EQ(train_scene_count(8, 0.8), 6);
  const auto split = split_by_scene(pairs, 2);
  EXPECT_EQ(split.train.size(), 40u);
  EXPECT_EQ(split.eval.size(), 20u);
  const auto h = label_histogram(pairs);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::size_t{0}), pairs.size());

  const std::string csv = format_labels_csv(pairs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "pair_id,scene,frame_i,frame_j,rot_deg,trans_m,tau_gt");
  auto back = parse_labels_csv(csv);
  attach_descriptors(back, format_desc(pairs));
  ASSERT_EQ(back.size(), pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    EXPECT_EQ(back[k].tau_gt, pairs[k].tau_gt);
    EXPECT_EQ(back[k].delta.translation_m, pairs[k].delta.translation_m);
    EXPECT_EQ(back[k].frames, pairs[k].frames);
    EXPECT_EQ(back[k].cur_token, pairs[k].cur_token);
    EXPECT_EQ(back[k].ref_token, pairs[k].ref_token);
  }
  const std::string desc = format_desc(pairs);
  EXPECT_EQ(desc.substr(0, 4), "DESC");
  EXPECT_EQ(desc.size(), 12 + pairs.size() * 2 * DescriptorLayout::kDim * 4);
  auto short_labels = parse_labels_csv(csv);
  short_labels.pop_back();
  EXPECT_THROW(attach_descriptors(short_labels, desc), DataError);
  EXPECT_THROW(parse_labels_csv("pair,scene\n"), DataError);
  EXPECT_EQ(build_dataset(dc).size(), pairs.size());
  EXPECT_EQ(format_labels_csv(build_dataset(dc)), csv);
}
