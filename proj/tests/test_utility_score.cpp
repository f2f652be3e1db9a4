#include <gtest/gtest.h>

#include "leangate/utility_score.hpp"
#include "score_oracle.hpp"
#include "support.hpp"

using namespace leangate;
using namespace testing_support;

namespace {

PointMapFrame constant_frame(Rng& rng, int n, double c, double q) {
  auto f = random_frame(rng, n, n, 0.0);
  for (auto& v : f.confidence) v = c;
  for (auto& v : f.quality) v = q;
  return f;
}

}  // namespace

TEST(PixelValidity, IdenticalStrongFramesAllTrue) {
  Rng rng(1);
  const auto f = constant_frame(rng, 6, 0.9, 2.0);
  const auto mask = pixel_validity(f, f, correspondence_search(f, f), {});
  EXPECT_EQ(count_true(mask), f.pixel_count());
}

TEST(PixelValidity, QualityBoundaryFails) {
  Rng rng(2);
  const auto f = constant_frame(rng, 6, 0.9, 1.0);
  EXPECT_EQ(count_true(pixel_validity(f, f, correspondence_search(f, f), {})), 0u);
  // sqrt(1.5 * 1.5) == 1.5 is not strictly greater than tau_q
  const auto g = constant_frame(rng, 6, 0.9, 1.5);
  EXPECT_EQ(count_true(pixel_validity(g, g, correspondence_search(g, g), {})), 0u);
}

TEST(PixelValidity, ConfidenceBoundaryFails) {
  Rng rng(3);
  const auto f = constant_frame(rng, 5, 0.0, 2.0);
  EXPECT_EQ(count_true(pixel_validity(f, f, correspondence_search(f, f), {})), 0u);
}

TEST(PixelValidity, HandCaseMask) {
  const auto [fi, fj] = hand_case_3x3();
  const auto mask = pixel_validity(fi, fj, correspondence_search(fi, fj), {});
  const std::uint8_t expected[9] = {1, 1, 1, 1, 1, 0, 0, 0, 0};
  for (std::size_t k = 0; k < 9; ++k) EXPECT_EQ(mask[k], expected[k]) << "pixel " << k;
}

TEST(Fractions, MatchingFractionExamples) {
  Grid<std::uint8_t> all(3, 3, 1);
  EXPECT_EQ(matching_fraction(all, 9), 1.0);
  Grid<std::uint8_t> five(3, 3, 0);
  for (std::size_t k = 0; k < 5; ++k) five[k] = 1;
  EXPECT_EQ(matching_fraction(five, 9), 5.0 / 9.0);
  EXPECT_EQ(matching_fraction(Grid<std::uint8_t>(3, 3, 0), 0), 0.0);
}

TEST(Fractions, UniqueFractionExamples) {
  Rng rng(4);
  const auto f = constant_frame(rng, 3, 0.9, 2.0);
  const auto corr = correspondence_search(f, f);
  const auto mask = pixel_validity(f, f, corr, {});
  EXPECT_EQ(unique_fraction(corr, mask, 9), 1.0);

  const auto [fi, fj] = hand_case_3x3();
  const auto c2 = correspondence_search(fi, fj);
  EXPECT_EQ(unique_fraction(c2, pixel_validity(fi, fj, c2, {}), 9), 4.0 / 9.0);

  CorrespondenceMap collapse(3, 3);
  for (auto& t : collapse.target) t = PixelCoord{1, 1};
  for (auto& r : collapse.residual) r = 0.0;
  EXPECT_EQ(unique_fraction(collapse, Grid<std::uint8_t>(3, 3, 1), 9), 1.0 / 9.0);
}

TEST(Score, HandCaseExact) {
  const auto [fi, fj] = hand_case_3x3();
  const auto b = score(fi, fj);
  EXPECT_EQ(b.f_m, 5.0 / 9.0);
  EXPECT_EQ(b.f_u, 4.0 / 9.0);
  EXPECT_EQ(b.S, 4.0 / 9.0);
  EXPECT_EQ(b.tau_gt, 1.0 - 4.0 / 9.0);
  EXPECT_EQ(b.tau_gt, 5.0 / 9.0);
  EXPECT_EQ(b.n_valid, 5u);
  EXPECT_EQ(b.n_unique, 4u);
}

TEST(Score, IdenticalAndDisjoint) {
  Rng rng(5);
  const auto f = constant_frame(rng, 8, 0.9, 2.0);
  const auto same = score(f, f);
  EXPECT_EQ(same.S, 1.0);
  EXPECT_EQ(same.tau_gt, 0.0);
  auto g = f;
  for (auto& p : g.points) p += Vec3(50, 0, 0);
  const auto far = score(f, g);
  EXPECT_EQ(far.S, 0.0);
  EXPECT_EQ(far.tau_gt, 1.0);
}

TEST(Score, EmptyOmegaReadsAsNovel) {
  Rng rng(6);
  const auto f = constant_frame(rng, 4, 0.9, 2.0);
  PointMapFrame empty(0, 4, 4);
  for (const auto& b : {score(f, empty), score(empty, f), score(empty, empty)}) {
    EXPECT_EQ(b.f_m, 0.0);
    EXPECT_EQ(b.f_u, 0.0);
    EXPECT_EQ(b.S, 0.0);
    EXPECT_EQ(b.tau_gt, 1.0);
  }
}

TEST(Score, MatchesStraightLineOracle) {
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_frame(rng, 8, 8, 0.15, 0.3);
    const auto b = random_frame(rng, 8, 8, 0.15, 0.3);
    SearchParams full;
    full.window = 8;
    const auto got = score(a, b, {}, full);
    const auto want = oracle_score(a, b);
    EXPECT_NEAR(got.f_m, want.f_m, 1e-12);
    EXPECT_NEAR(got.f_u, want.f_u, 1e-12);
    EXPECT_NEAR(got.S, want.S, 1e-12);
  }
}

TEST(Score, BoundsCountsAndEqualResolutionIdentity) {
  Rng rng(8);
  for (int k = 0; k < 300; ++k) {
    const int n = 3 + static_cast<int>(rng.below(6));
    const auto a = random_frame(rng, n, n, 0.0, 0.2);
    const auto b = random_frame(rng, n, n, 0.0, 0.2);
    const auto s = score(a, b);
    EXPECT_GE(s.f_m, 0.0);
    EXPECT_LE(s.f_m, 1.0);
    EXPECT_GE(s.f_u, 0.0);
    EXPECT_LE(s.f_u, 1.0);
    EXPECT_LE(s.f_u, s.f_m);
    EXPECT_EQ(s.S, s.f_u);
    EXPECT_EQ(s.S, std::min(s.f_m, s.f_u));
    EXPECT_EQ(s.tau_gt, 1.0 - s.S);
    EXPECT_EQ(s.f_m, static_cast<double>(s.n_valid) / static_cast<double>(a.valid_count()));
    EXPECT_EQ(s.f_u, static_cast<double>(s.n_unique) / static_cast<double>(b.valid_count()));
  }
}

TEST(Score, MonotoneInThresholds) {
  Rng rng(9);
  for (int k = 0; k < 40; ++k) {
    const auto a = surface_frame(rng, 8, 8, 0.03, 0.1);
    const auto b = surface_frame(rng, 8, 8, 0.03, 0.1);
    double prev = 2.0;
    for (double td : {0.2, 0.1, 0.05, 0.02}) {
      ValidityThresholds t;
      t.tau_d = td;
      const double s = score(a, b, t).S;
      EXPECT_LE(s, prev);
      prev = s;
    }
    prev = 2.0;
    for (double tc : {0.0, 0.3, 0.6, 0.9}) {
      ValidityThresholds t;
      t.tau_c = tc;
      const double s = score(a, b, t).S;
      EXPECT_LE(s, prev);
      prev = s;
    }
    prev = 2.0;
    for (double tq : {1.0, 1.5, 2.0, 2.5}) {
      ValidityThresholds t;
      t.tau_q = tq;
      const double s = score(a, b, t).S;
      EXPECT_LE(s, prev);
      prev = s;
    }
  }
}

TEST(KeyframeTrigger, StrictBoundary) {
  EXPECT_TRUE(keyframe_trigger(0.30, 0.33));
  EXPECT_FALSE(keyframe_trigger(0.33, 0.33));
  EXPECT_FALSE(keyframe_trigger(1.0));
}

TEST(Thresholds, ValidateRejectsNonsense) {
  ValidityThresholds t;
  t.tau_d = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = {};
  t.tau_c = 1.5;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(BreakdownCsv, RowMatchesHeaderWidth) {
  const auto [fi, fj] = hand_case_3x3();
  const std::string row = breakdown_csv_row(0, 0, 1, score(fi, fj));
  EXPECT_EQ(std::count(row.begin(), row.end(), ','),
            std::count(kBreakdownCsvHeader, kBreakdownCsvHeader + std::strlen(kBreakdownCsvHeader), ','));
}
