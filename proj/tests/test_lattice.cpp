#include <gtest/gtest.h>

#include <layergibbs/lattice.hpp>

using namespace layergibbs;

TEST(LayerInterval, RejectsReversedEndpoints) { EXPECT_THROW(LayerInterval(3, 1), std::invalid_argument); }

TEST(LayerConfig, FillOutsideWindow) {
  const LayerConfig x = LayerConfig::constant({-1, 1}, -1, 1);
  EXPECT_EQ(x(0), -1);
  EXPECT_EQ(x(5), 1);
  EXPECT_EQ(x(-7), 1);
  const LayerConfig y = LayerConfig::constant({-1, 1}, 1, -1);
  EXPECT_EQ(y(2), -1);
}

TEST(LayerConfig, AlternatingStartsPlusAtEvenSites) {
  const LayerConfig a = LayerConfig::alternating({-2, 2});
  EXPECT_EQ(a(-2), 1);
  EXPECT_EQ(a(-1), -1);
  EXPECT_EQ(a(0), 1);
  EXPECT_EQ(a(1), -1);
}

TEST(LayerConfig, RejectsBadSpins) {
  EXPECT_THROW(LayerConfig({0, 1}, {1, 0}), std::invalid_argument);
  EXPECT_THROW(LayerConfig({0, 1}, {1}), std::invalid_argument);
}

TEST(LayerConfig, RestrictionAndShift) {
  const LayerConfig a = LayerConfig::alternating({-3, 3});
  const LayerConfig r = a.restricted({-1, 1});
  EXPECT_EQ(r(-1), -1);
  EXPECT_EQ(r(-2), 1);
  const LayerConfig s = a.shifted(1);
  for (int i = -3; i <= 3; ++i) EXPECT_EQ(s(i + 1), a(i));
}

TEST(LayerConfig, PointwiseOrder) {
  const LayerConfig minus = LayerConfig::constant({0, 2}, -1);
  const LayerConfig mixed = minus.with(std::vector<int>{1}, 1);
  EXPECT_TRUE(minus.precedes(mixed));
  EXPECT_FALSE(mixed.precedes(minus));
  EXPECT_TRUE(mixed.precedes(LayerConfig::all_plus()));
}

TEST(LayerConfig, TrimmedDropsFillAtEdges) {
  const LayerConfig x({-3, 3}, {1, 1, -1, 1, -1, 1, 1});
  const LayerConfig t = x.trimmed();
  EXPECT_EQ(t.window(), LayerInterval(-1, 1));
  for (int i = -5; i <= 5; ++i) EXPECT_EQ(t(i), x(i));
}

TEST(Telescope, DecomposeExample) {
  const auto t = telescope_decompose({0, 1, 4});
  ASSERT_TRUE(t);
  EXPECT_EQ(t->i, 4);
  EXPECT_EQ(t->m, 4);
}

TEST(Telescope, DecomposeSingleton) {
  const auto t = telescope_decompose({7});
  ASSERT_TRUE(t);
  EXPECT_EQ(t->i, 7);
  EXPECT_EQ(t->m, 0);
}

TEST(Telescope, EmptySetThrows) { EXPECT_THROW(telescope_decompose({}), std::invalid_argument); }

TEST(Telescope, CellSizes) {
  EXPECT_EQ(enumerate_telescope_cell(0, 0).size(), 1u);
  for (int m = 1; m <= 8; ++m) EXPECT_EQ(enumerate_telescope_cell(3, m).size(), std::size_t(1) << (m - 1)) << m;
}

TEST(Telescope, CellsPartitionSubsetsOfAnInterval) {
  // every subset of [i-m, i] containing i lies in exactly one cell (i, m')
  const int i = 2, m = 5;
  std::map<SiteSet, int> seen;
  for (int mm = 0; mm <= m; ++mm)
    for (const auto& r : enumerate_telescope_cell(i, mm)) {
      ++seen[r];
      const auto t = telescope_decompose(r);
      ASSERT_TRUE(t);
      EXPECT_EQ(t->i, i);
      EXPECT_EQ(t->m, mm);
    }
  EXPECT_EQ(seen.size(), std::size_t(1) << m);
  for (const auto& [s, c] : seen) EXPECT_EQ(c, 1);
}

TEST(Telescope, SubsetsOfInterval) {
  EXPECT_EQ(subsets_of({0, 3}).size(), 15u);
  EXPECT_THROW(subsets_of({0, 30}), std::invalid_argument);
}
