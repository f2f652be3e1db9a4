#include <gtest/gtest.h>

#include "leangate/dataset.hpp"
#include "leangate/gating.hpp"
#include "support.hpp"

using namespace leangate;
using namespace testing_support;

namespace {

PolicyConfig policy(PolicyKind kind) {
  PolicyConfig c;
  c.kind = kind;
  return c;
}

std::vector<std::size_t> kept_frames(const std::vector<GateDecision>& d) {
  std::vector<std::size_t> out;
  for (const auto& x : d) {
    if (x.kept) out.push_back(x.frame);
  }
  return out;
}

}  // namespace

TEST(RunPolicy, StrideKeepsEveryNthFrame) {
  PolicyConfig c = policy(PolicyKind::stride);
  c.stride = 15;
  const auto d = run_policy(150, c);
  ASSERT_EQ(d.size(), 150u);
  EXPECT_EQ(kept_count(d), 10u);
  std::vector<std::size_t> want;
  for (std::size_t k = 0; k < 150; k += 15) want.push_back(k);
  EXPECT_EQ(kept_frames(d), want);
  EXPECT_EQ(d[0].policy, "stride(15)");
  EXPECT_DOUBLE_EQ(downsample_factor(d), 15.0);
}

TEST(RunPolicy, DenseKeepsEverything) {
  const auto d = run_policy(37, policy(PolicyKind::dense));
  EXPECT_EQ(kept_count(d), 37u);
  EXPECT_EQ(downsample_factor(d), 1.0);
  EXPECT_EQ(kept_fraction(d), 1.0);
}

TEST(RunPolicy, TeacherOnStaticCameraKeepsOnlyFrameZero) {
  const auto scene = generate_scene(3);
  const PinholeCamera cam;
  const SE3Pose pose = look_pose(Vec3(0, 0, 1.4), 0.3, deg2rad(45.0));
  const auto frame = render_frame(scene, pose, cam);
  std::vector<PointMapFrame> frames(20, frame);
  Trajectory traj;
  for (int k = 0; k < 20; ++k) traj.push_back({k / 12.0, pose});
  const auto d = run_policy(frames.size(), policy(PolicyKind::teacher_gate), teacher_scorer(frames, traj));
  EXPECT_EQ(kept_count(d), 1u);
  EXPECT_TRUE(d[0].kept);
  for (std::size_t k = 1; k < d.size(); ++k) {
    ASSERT_TRUE(d[k].score.has_value());
    EXPECT_EQ(*d[k].score, 1.0);
    EXPECT_EQ(d[k].ref, 0u);
  }
}

TEST(RunPolicy, ConstantHalfStudentKeepsAllAtInclusiveThreshold) {
  GateRegressor zero = GateRegressor::initialized(ModelShape{}, 1);
  std::fill(zero.params.begin(), zero.params.end(), 0.0f);
  const PinholeCamera cam;
  const auto stream = make_stream(7, 0, 12, cam);
  const auto scorer = student_scorer(zero, cam, stream.frames, stream.trajectory);
  PolicyConfig c = policy(PolicyKind::student_gate);
  c.tau_keep = 0.5;
  const auto d = run_policy(stream.frames.size(), c, scorer);
  EXPECT_EQ(kept_count(d), stream.frames.size());
  for (std::size_t k = 1; k < d.size(); ++k) EXPECT_EQ(*d[k].score, 0.5);
  c.inclusive = false;
  EXPECT_EQ(kept_count(run_policy(stream.frames.size(), c, scorer)), 1u);
}

TEST(RunPolicy, ReferenceFollowsLastKeptFrame) {
  // Scorer flags every third frame as novel.
  const PairScorer scorer = [](std::size_t, std::size_t cur) { return cur % 3 == 0 ? 0.9 : 0.1; };
  const auto d = run_policy(10, policy(PolicyKind::student_gate), scorer);
  EXPECT_EQ(kept_frames(d), (std::vector<std::size_t>{0, 3, 6, 9}));
  EXPECT_FALSE(d[0].ref.has_value());
  EXPECT_FALSE(d[0].score.has_value());
  const std::uint32_t want_ref[10] = {0, 0, 0, 0, 3, 3, 3, 6, 6, 6};
  for (std::size_t k = 1; k < 10; ++k) EXPECT_EQ(*d[k].ref, want_ref[k]) << "frame " << k;
}

TEST(RunPolicy, TeacherMatchesKeyframeTrigger) {
  const PinholeCamera cam;
  const auto stream = make_stream(7, 2, 40, cam);
  const auto scorer = teacher_scorer(stream.frames, stream.trajectory);
  const auto d = run_policy(stream.frames.size(), policy(PolicyKind::teacher_gate), scorer);
  for (std::size_t k = 1; k < d.size(); ++k) {
    const double S = scorer(*d[k].ref, k);
    EXPECT_EQ(*d[k].score, S);
    EXPECT_EQ(d[k].kept, keyframe_trigger(S, kDefaultOmegaK));
  }
  EXPECT_GT(kept_count(d), 1u);
}

TEST(RunPolicy, SingleFrameAndErrors) {
  const PairScorer never = [](std::size_t, std::size_t) -> double { throw std::logic_error("called"); };
  for (auto kind : {PolicyKind::dense, PolicyKind::stride, PolicyKind::teacher_gate, PolicyKind::student_gate}) {
    const auto d = run_policy(1, policy(kind), never);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_TRUE(d[0].kept);
  }
  EXPECT_THROW(run_policy(0, policy(PolicyKind::dense)), DataError);
  EXPECT_THROW(run_policy(5, policy(PolicyKind::teacher_gate)), ConfigError);
  PolicyConfig bad = policy(PolicyKind::stride);
  bad.stride = 0;
  EXPECT_THROW(run_policy(5, bad), ConfigError);
}

TEST(ParsePolicy, AcceptsKnownNamesOnly) {
  EXPECT_EQ(parse_policy("dense").kind, PolicyKind::dense);
  EXPECT_EQ(parse_policy("teacher_gate").kind, PolicyKind::teacher_gate);
  EXPECT_EQ(parse_policy("student_gate").kind, PolicyKind::student_gate);
  const auto s = parse_policy("stride(7)");
  EXPECT_EQ(s.kind, PolicyKind::stride);
  EXPECT_EQ(s.stride, 7);
  for (const char* bad : {"stride()", "stride(0)", "stride(x)", "stride(-3)", "gate", ""}) {
    EXPECT_THROW(parse_policy(bad), ConfigError) << bad;
  }
}

TEST(SweepThreshold, EndpointsAndMonotone) {
  Rng rng(4);
  std::vector<double> taus(60);
  for (auto& t : taus) t = rng.uniform(0.0, 0.999);
  taus[17] = 1.0;
  taus[40] = 1.0;
  const PairScorer scorer = [&](std::size_t, std::size_t cur) { return taus[cur]; };
  const auto ends = sweep_threshold(taus.size(), scorer, {0.0, 1.0});
  EXPECT_EQ(ends[0], 1.0);
  EXPECT_DOUBLE_EQ(ends[1], 3.0 / 60.0);

  const PinholeCamera cam;
  const auto stream = make_stream(7, 6, 60, cam);
  const auto model = GateRegressor::initialized(ModelShape{}, 3);
  const auto s = sweep_threshold(stream.frames.size(), student_scorer(model, cam, stream.frames, stream.trajectory),
                                 {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0});
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LE(s[k], s[k - 1]);
  EXPECT_THROW(sweep_threshold(5, scorer, {0.5, 0.2}), ConfigError);
}

TEST(Agreement, CountsMatchingDecisions) {
  const auto a = run_policy(10, policy(PolicyKind::dense));
  PolicyConfig c = policy(PolicyKind::stride);
  c.stride = 2;
  const auto b = run_policy(10, c);
  EXPECT_DOUBLE_EQ(agreement_rate(a, b), 0.5);
  EXPECT_EQ(agreement_rate(a, a), 1.0);
  EXPECT_THROW(agreement_rate(a, run_policy(9, c)), DataError);
}

TEST(DecisionCsv, RoundTripAndErrors) {
  const PairScorer scorer = [](std::size_t ref, std::size_t cur) { return 0.1 * static_cast<double>(cur - ref) + 1e-3; };
  const auto d = run_policy(25, policy(PolicyKind::student_gate), scorer);
  const std::string text = format_decisions_csv(d);
  EXPECT_EQ(text.substr(0, text.find('\n')), kDecisionCsvHeader);
  EXPECT_NE(text.find("\n0,student_gate,,,1\n"), std::string::npos);
  EXPECT_EQ(parse_decisions_csv(text), d);
  EXPECT_THROW(parse_decisions_csv("frame,kept\n0,1\n"), DataError);
  EXPECT_THROW(parse_decisions_csv(std::string(kDecisionCsvHeader) + "\n0,dense,,,2\n"), DataError);
  EXPECT_THROW(parse_decisions_csv(std::string(kDecisionCsvHeader) + "\n"), DataError);
}
