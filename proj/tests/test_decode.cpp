#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "det3d/decode.hpp"

using namespace det3d;
using namespace det3d::decode;

namespace {

Keypoint kp(KeypointKind kind, std::size_t row, std::size_t col, double score, double tag,
            std::size_t cls = 0) {
  return {kind, cls, row, col, score, tag};
}

// Brute-force peak test: strict max of the window, equal neighbours only
// allowed at lexicographically larger cells.
bool naive_is_peak(const FeatureMap& m, std::size_t r, std::size_t c, std::size_t ch,
                   std::size_t window) {
  const long half = static_cast<long>(window / 2);
  for (long dr = -half; dr <= half; ++dr) {
    for (long dc = -half; dc <= half; ++dc) {
      const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
      if ((dr == 0 && dc == 0) || rr < 0 || cc < 0 || rr >= static_cast<long>(m.height()) ||
          cc >= static_cast<long>(m.width()))
        continue;
      const float n = m(rr, cc, ch);
      if (n > m(r, c, ch)) return false;
      if (n == m(r, c, ch) && (dr < 0 || (dr == 0 && dc < 0))) return false;
    }
  }
  return true;
}

}  // namespace

TEST(ExtractPeaks, AllZeroIsEmpty) {
  PeakExtractionConfig cfg{0.1, 3, 100};
  EXPECT_TRUE(extract_peaks(FeatureMap(4, 4, 2, MapRole::Heatmap), cfg, KeypointKind::Center).empty());
}

TEST(ExtractPeaks, SingleCenterPeak) {
  FeatureMap m(3, 3, 1, MapRole::Heatmap);
  m(1, 1, 0) = 0.9f;
  const auto p = extract_peaks(m, {0.3, 3, 100}, KeypointKind::TopLeft);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].row, 1u);
  EXPECT_EQ(p[0].col, 1u);
  EXPECT_FLOAT_EQ(p[0].score, 0.9f);
  EXPECT_EQ(p[0].kind, KeypointKind::TopLeft);
}

TEST(ExtractPeaks, EqualPeaksOrderedByPosition) {
  FeatureMap m(5, 5, 1, MapRole::Heatmap);
  m(4, 4, 0) = 0.8f;
  m(0, 0, 0) = 0.8f;
  const auto p = extract_peaks(m, {0.3, 3, 10}, KeypointKind::Center);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].row, 0u);
  EXPECT_EQ(p[0].col, 0u);
  EXPECT_EQ(p[1].row, 4u);
  EXPECT_EQ(p[1].col, 4u);
}

TEST(ExtractPeaks, PlateauYieldsOnePeak) {
  FeatureMap m(3, 4, 1, MapRole::Heatmap);
  m(1, 1, 0) = m(1, 2, 0) = 0.6f;
  const auto p = extract_peaks(m, {0.3, 3, 10}, KeypointKind::Center);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].col, 1u);
}

TEST(ExtractPeaks, ConfigValidation) {
  FeatureMap m(2, 2, 1, MapRole::Heatmap);
  EXPECT_THROW(extract_peaks(m, {1.5, 3, 1}, KeypointKind::Center), ConfigError);
  EXPECT_THROW(extract_peaks(m, {0.5, 2, 1}, KeypointKind::Center), ConfigError);
  EXPECT_THROW(extract_peaks(m, {0.5, 3, 0}, KeypointKind::Center), ConfigError);
}

TEST(ExtractPeaks, MatchesBruteForceAndRespectsLimits) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::uniform_int_distribution<std::size_t> side(1, 9), chans(1, 3), topk(1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    FeatureMap m(side(rng), side(rng), chans(rng), MapRole::Heatmap);
    // Quantize so ties actually happen.
    for (float& v : m.data()) v = std::round(u(rng) * 4.f) / 4.f;
    const std::size_t window = 1 + 2 * (rng() % 3);
    const PeakExtractionConfig cfg{0.3, window, topk(rng)};
    const auto peaks = extract_peaks(m, cfg, KeypointKind::Center);

    ASSERT_LE(peaks.size(), cfg.top_k * m.channels());
    for (std::size_t i = 0; i < peaks.size(); ++i) {
      ASSERT_GE(peaks[i].score, cfg.score_threshold);
      ASSERT_TRUE(naive_is_peak(m, peaks[i].row, peaks[i].col, peaks[i].class_id, window));
      if (i > 0) ASSERT_GE(peaks[i - 1].score, peaks[i].score);
    }
    for (std::size_t ch = 0; ch < m.channels(); ++ch) {
      std::size_t expected = 0;
      for (std::size_t r = 0; r < m.height(); ++r)
        for (std::size_t c = 0; c < m.width(); ++c)
          if (m(r, c, ch) >= 0.3f && naive_is_peak(m, r, c, ch, window)) ++expected;
      const auto got = std::count_if(peaks.begin(), peaks.end(),
                                     [&](const Keypoint& k) { return k.class_id == ch; });
      ASSERT_EQ(static_cast<std::size_t>(got), std::min(expected, cfg.top_k));
    }
    ASSERT_EQ(extract_peaks(m, cfg, KeypointKind::Center), peaks);
  }
}

TEST(AttachTags, RequiresSingleChannel) {
  std::vector<Keypoint> kps{kp(KeypointKind::TopLeft, 1, 0, 0.9, 0)};
  FeatureMap e(2, 2, 1, std::vector<float>{0, 0, 3.5f, 0}, MapRole::Embedding);
  attach_tags(kps, e);
  EXPECT_EQ(kps[0].tag, 3.5);
  EXPECT_THROW(attach_tags(kps, FeatureMap(2, 2, 2)), ConfigError);
}

TEST(GroupCorners, SingleCandidateUnderThreshold) {
  const auto pairs = group_corners({kp(KeypointKind::TopLeft, 0, 0, 1, 0.10)},
                                   {kp(KeypointKind::BottomRight, 2, 2, 1, 0.11)}, {0.05, true});
  EXPECT_EQ(pairs.size(), 1u);
}

TEST(GroupCorners, DistanceAboveThreshold) {
  EXPECT_TRUE(group_corners({kp(KeypointKind::TopLeft, 0, 0, 1, 0.1)},
                            {kp(KeypointKind::BottomRight, 2, 2, 1, 0.9)}, {0.05, true})
                  .empty());
}

TEST(GroupCorners, GreedyByAscendingDistance) {
  const std::vector tl{kp(KeypointKind::TopLeft, 0, 0, 1, 0.1), kp(KeypointKind::TopLeft, 0, 1, 1, 0.5)};
  const std::vector br{kp(KeypointKind::BottomRight, 5, 5, 1, 0.52),
                       kp(KeypointKind::BottomRight, 5, 6, 1, 0.12)};
  const auto pairs = group_corners(tl, br, {0.1, true});
  ASSERT_EQ(pairs.size(), 2u);
  std::set<std::pair<double, double>> tags;
  for (const auto& [a, b] : pairs) tags.insert({a.tag, b.tag});
  EXPECT_EQ(tags, (std::set<std::pair<double, double>>{{0.5, 0.52}, {0.1, 0.12}}));
}

TEST(GroupCorners, GateAndClassSeparation) {
  const auto tl = kp(KeypointKind::TopLeft, 4, 4, 1, 0.0);
  EXPECT_TRUE(group_corners({tl}, {kp(KeypointKind::BottomRight, 3, 6, 1, 0.0)}, {0.5, true}).empty());
  EXPECT_EQ(group_corners({tl}, {kp(KeypointKind::BottomRight, 3, 6, 1, 0.0)}, {0.5, false}).size(), 1u);
  EXPECT_TRUE(group_corners({tl}, {kp(KeypointKind::BottomRight, 6, 6, 1, 0.0, 1)}, {0.5, true}).empty());
  EXPECT_THROW(group_corners({}, {}, {0.0, true}), ConfigError);
}

TEST(GroupCorners, NeverReusesAndRespectsTheta) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tag(0.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Keypoint> tl, br;
    const std::size_t n = rng() % 8, m = rng() % 8;
    for (std::size_t i = 0; i < n; ++i) tl.push_back(kp(KeypointKind::TopLeft, rng() % 5, rng() % 5, 1, tag(rng), rng() % 2));
    for (std::size_t i = 0; i < m; ++i) br.push_back(kp(KeypointKind::BottomRight, rng() % 9, rng() % 9, 1, tag(rng), rng() % 2));
    const GroupingConfig cfg{0.4, true};
    const auto pairs = group_corners(tl, br, cfg);
    // Random tags are distinct, so they identify keypoints.
    std::set<double> seen_tl, seen_br;
    for (const auto& [a, b] : pairs) {
      ASSERT_LT(std::abs(a.tag - b.tag), cfg.theta);
      ASSERT_EQ(a.class_id, b.class_id);
      ASSERT_LE(a.row, b.row);
      ASSERT_LE(a.col, b.col);
      ASSERT_TRUE(seen_tl.insert(a.tag).second);
      ASSERT_TRUE(seen_br.insert(b.tag).second);
    }
    ASSERT_LE(pairs.size(), std::min(n, m));
  }
}

TEST(RefineWithOffsets, Examples) {
  FeatureMap zero(5, 5, 2, MapRole::Offset);
  auto p = refine_with_offsets(kp(KeypointKind::Center, 3, 4, 1, 0), zero, 1);
  EXPECT_EQ(p, std::pair(4.0, 3.0));

  FeatureMap off(3, 3, 2, MapRole::Offset);
  off(2, 2, 0) = 0.5f;
  off(2, 2, 1) = 0.25f;
  p = refine_with_offsets(kp(KeypointKind::Center, 2, 2, 1, 0), off, 4);
  EXPECT_EQ(p, std::pair(10.0, 9.0));

  FeatureMap neg(1, 2, 2, MapRole::Offset);
  neg(0, 1, 0) = -0.5f;
  p = refine_with_offsets(kp(KeypointKind::Center, 0, 1, 1, 0), neg, 1);
  EXPECT_EQ(p, std::pair(0.5, 0.0));
}

TEST(RefineWithOffsets, ChannelCountAndBounds) {
  EXPECT_THROW(refine_with_offsets(kp(KeypointKind::Center, 0, 0, 1, 0), FeatureMap(2, 2, 3), 1),
               ConfigError);
  EXPECT_THROW(refine_with_offsets(kp(KeypointKind::Center, 5, 0, 1, 0), FeatureMap(2, 2, 2), 1),
               BoundsError);
}

namespace {

struct AssembleFixture {
  FeatureMap zeros{50, 50, 2, MapRole::Offset};
  OffsetMaps<float> maps{zeros, zeros, zeros};
  std::vector<std::pair<Keypoint, Keypoint>> pairs{
      {kp(KeypointKind::TopLeft, 10, 10, 0.9, 0), kp(KeypointKind::BottomRight, 40, 40, 0.6, 0)}};
};

}  // namespace

TEST(AssembleBoxes, CenterInsideMiddleThirdKeepsBox) {
  AssembleFixture f;
  const auto boxes = assemble_boxes(f.pairs, {kp(KeypointKind::Center, 25, 25, 0.3, 0)}, f.maps, 1);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].box.x_min, 10.0);
  EXPECT_EQ(boxes[0].box.y_max, 40.0);
  EXPECT_DOUBLE_EQ(boxes[0].box.score, 0.6);
  EXPECT_EQ(boxes[0].center_px, std::pair(25.0, 25.0));
  EXPECT_TRUE(in_central_region(boxes[0].box, 20.0, 30.0));
  EXPECT_FALSE(in_central_region(boxes[0].box, 19.99, 25.0));
}

TEST(AssembleBoxes, CenterOutsideDrops) {
  AssembleFixture f;
  EXPECT_TRUE(assemble_boxes(f.pairs, {kp(KeypointKind::Center, 12, 12, 0.9, 0)}, f.maps, 1).empty());
  EXPECT_TRUE(assemble_boxes(f.pairs, {kp(KeypointKind::Center, 25, 25, 0.9, 0, 1)}, f.maps, 1).empty());
}

TEST(AssembleBoxes, NoCentersNoBoxes) {
  AssembleFixture f;
  EXPECT_TRUE(assemble_boxes(f.pairs, {}, f.maps, 1).empty());
}

TEST(AssembleBoxes, HighestScoringCenterAttached) {
  AssembleFixture f;
  const auto boxes = assemble_boxes(
      f.pairs, {kp(KeypointKind::Center, 24, 24, 0.4, 0), kp(KeypointKind::Center, 26, 26, 0.8, 0)},
      f.maps, 1);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].center.row, 26u);
}
