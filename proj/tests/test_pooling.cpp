#include <gtest/gtest.h>

#include <random>

#include "det3d/pooling.hpp"
#include "oracles.hpp"

using namespace det3d;
using namespace det3d::pooling;

namespace {

BasicFeatureMap<double> make(std::size_t h, std::size_t w, std::vector<double> v) {
  return BasicFeatureMap<double>(h, w, 1, std::move(v));
}

std::vector<double> values(const BasicFeatureMap<double>& m) {
  return {m.data().begin(), m.data().end()};
}

BasicFeatureMap<double> random_map(std::mt19937_64& rng, std::size_t max_side, std::size_t channels) {
  std::uniform_int_distribution<std::size_t> side(1, max_side);
  std::uniform_real_distribution<double> v(-5.0, 5.0);
  BasicFeatureMap<double> m(side(rng), side(rng), channels);
  for (double& x : m.data()) x = v(rng);
  return m;
}

constexpr std::array kDirections{
    PoolingDirection{Axis::Horizontal, Sense::TowardIncreasingIndex},
    PoolingDirection{Axis::Horizontal, Sense::TowardDecreasingIndex},
    PoolingDirection{Axis::Vertical, Sense::TowardIncreasingIndex},
    PoolingDirection{Axis::Vertical, Sense::TowardDecreasingIndex}};

}  // namespace

TEST(DirectionalScan, SuffixMaxAlongRow) {
  const auto out = directional_max_scan(make(1, 3, {1, 5, 2}),
                                        0, {Axis::Horizontal, Sense::TowardIncreasingIndex});
  EXPECT_EQ(values(out), (std::vector<double>{5, 5, 2}));
}

TEST(DirectionalScan, PrefixMaxUpColumn) {
  const auto out = directional_max_scan(make(3, 1, {0, 0, 7}),
                                        0, {Axis::Vertical, Sense::TowardDecreasingIndex});
  EXPECT_EQ(values(out), (std::vector<double>{0, 0, 7}));
}

TEST(DirectionalScan, FarEdgeUnchanged) {
  const auto m = make(2, 3, {4, -1, 3, 2, 8, -6});
  const auto inc = directional_max_scan(m, 0, {Axis::Horizontal, Sense::TowardIncreasingIndex});
  EXPECT_EQ(inc(0, 2, 0), 3);
  EXPECT_EQ(inc(1, 2, 0), -6);
  const auto dec = directional_max_scan(m, 0, {Axis::Vertical, Sense::TowardDecreasingIndex});
  EXPECT_EQ(dec(0, 0, 0), 4);
  EXPECT_EQ(dec(0, 1, 0), -1);
}

TEST(DirectionalScan, BadChannel) {
  EXPECT_THROW(directional_max_scan(make(1, 1, {1}), 1, {}), BoundsError);
  EXPECT_THROW(center_pool(make(1, 1, {1}), 2), BoundsError);
  EXPECT_THROW(cascade_corner_pool(make(1, 1, {1}), 1, Corner::TopLeft), BoundsError);
}

TEST(CenterPool, Examples) {
  EXPECT_EQ(values(center_pool(make(1, 1, {3}), 0)), (std::vector<double>{6}));
  EXPECT_EQ(values(center_pool(make(2, 2, {1, 2, 3, 4}), 0)), (std::vector<double>{5, 6, 7, 8}));
  const auto k = center_pool(make(2, 3, std::vector<double>(6, 1.25)), 0);
  for (double v : k.data()) EXPECT_EQ(v, 2.5);
}

TEST(CascadeCornerPool, Examples) {
  EXPECT_EQ(values(cascade_corner_pool(make(1, 3, {1, 5, 2}), 0, Corner::TopLeft)),
            (std::vector<double>{10, 10, 4}));
  EXPECT_EQ(values(cascade_corner_pool(make(1, 1, {0.5}), 0, Corner::BottomRight)),
            (std::vector<double>{1.0}));
  const auto k = cascade_corner_pool(make(3, 2, std::vector<double>(6, -2.0)), 0, Corner::TopLeft);
  for (double v : k.data()) EXPECT_EQ(v, -4.0);
}

TEST(CascadeCornerPool, BottomRightScansTowardOrigin) {
  // [1 5 2]: decreasing hscan = [1,5,5]; height 1 so vscan equal; sum doubles.
  EXPECT_EQ(values(cascade_corner_pool(make(1, 3, {1, 5, 2}), 0, Corner::BottomRight)),
            (std::vector<double>{2, 10, 10}));
}

TEST(Pooling, MatchesBruteForceOnRandomMaps) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_map(rng, 8, 3);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (const auto& d : kDirections) {
        ASSERT_EQ(directional_max_scan(m, ch, d), oracle::naive_scan(m, ch, d));
      }
      ASSERT_EQ(center_pool(m, ch), oracle::naive_center_pool(m, ch));
      ASSERT_EQ(cascade_corner_pool(m, ch, Corner::TopLeft),
                oracle::naive_cascade(m, ch, Corner::TopLeft));
      ASSERT_EQ(cascade_corner_pool(m, ch, Corner::BottomRight),
                oracle::naive_cascade(m, ch, Corner::BottomRight));
    }
  }
}

TEST(Pooling, ScanIsIdempotent) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_map(rng, 8, 1);
    for (const auto& d : kDirections) {
      const auto once = directional_max_scan(m, 0, d);
      ASSERT_EQ(directional_max_scan(once, 0, d), once);
    }
  }
}

TEST(Pooling, MonotoneUnderPointwiseIncrease) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> bump(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_map(rng, 8, 1);
    auto raised = m;
    for (double& v : raised.data()) v += (rng() % 3 == 0) ? bump(rng) : 0.0;
    auto check = [](const BasicFeatureMap<double>& lo, const BasicFeatureMap<double>& hi) {
      for (std::size_t i = 0; i < lo.size(); ++i) ASSERT_LE(lo.data()[i], hi.data()[i]);
    };
    check(center_pool(m, 0), center_pool(raised, 0));
    check(cascade_corner_pool(m, 0, Corner::TopLeft), cascade_corner_pool(raised, 0, Corner::TopLeft));
    check(cascade_corner_pool(m, 0, Corner::BottomRight),
          cascade_corner_pool(raised, 0, Corner::BottomRight));
  }
}

TEST(Pooling, CenterPoolBoundedByGlobalExtremes) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_map(rng, 8, 1);
    const auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
    const auto pooled = center_pool(m, 0);
    for (double v : pooled.data()) {
      ASSERT_LE(v, 2.0 * *hi);
      ASSERT_GE(v, 2.0 * *lo);
    }
  }
}
