#include <gtest/gtest.h>

#include <layergibbs/decimation.hpp>
#include <layergibbs/transfer.hpp>

using namespace layergibbs;

TEST(Scheme, RejectsStepOne) {
  EXPECT_THROW(DecimationScheme::regular(1), std::invalid_argument);
  EXPECT_THROW(DecimationScheme::random(1.5, 1), std::invalid_argument);
}

TEST(Mask, RegularSites) {
  const auto m = make_mask(DecimationScheme::regular(5), {-7, 12});
  EXPECT_EQ(m, (SiteSet{-5, 0, 5, 10}));
}

TEST(Mask, RandomIsReproducibleAndWindowIndependent) {
  const auto s = DecimationScheme::random(0.3, 99);
  const auto a = make_mask(s, {-50, 50});
  const auto b = make_mask(s, {0, 50});
  EXPECT_EQ(a, make_mask(s, {-50, 50}));
  SiteSet tail;
  for (int i : a)
    if (i >= 0) tail.push_back(i);
  EXPECT_EQ(tail, b);
  EXPECT_TRUE(make_mask(DecimationScheme::random(0.0, 1), {0, 100}).empty());
  EXPECT_EQ(make_mask(DecimationScheme::random(1.0, 1), {0, 9}).size(), 10u);
}

TEST(Mask, RandomDensity) {
  const auto m = make_mask(DecimationScheme::random(0.2, 2024), {0, 99999});
  EXPECT_NEAR(m.size() / 100000.0, 0.2, 0.005);
}

TEST(Margin, AllMinusRegularMask) {
  const LayerConfig minus = LayerConfig::constant({0, 100}, -1);
  for (int b = 2; b <= 10; ++b) {
    const auto r = mask_margin(DecimationScheme::regular(b), 100, minus, 0.8);
    for (int k = 0; k <= 100; ++k) {
      const long kept = k / b + 1;
      EXPECT_EQ(r.literal[k], 2L * k - 8L * kept);
      EXPECT_EQ(r.indicator[k], 2L * k - 4L * kept);
    }
    EXPECT_EQ(r.literal_onset >= 0, b > MarginThresholds{}.literal_b) << b;
    EXPECT_EQ(r.indicator_onset >= 0, b > MarginThresholds{}.indicator_b) << b;
    EXPECT_DOUBLE_EQ(r.literal_value(10), 0.8 * r.literal[10]);
  }
}

TEST(Margin, PlusKeptSpinsCostNothing) {
  const auto r = mask_margin(DecimationScheme::regular(3), 30, LayerConfig::all_plus(), 1.0);
  for (int k = 0; k <= 30; ++k) EXPECT_EQ(r.literal[k], 2L * k);
  EXPECT_EQ(r.literal_onset, 1);
}

TEST(Scan, ZeroCouplingIsVacuous) {
  ExactEngine e(5, 0.0, 0.0);
  const std::vector<StressConfig> stress{{"all-minus", LayerConfig::constant({-10, 10}, -1)}};
  const auto r = decimated_decay_scan(DecimationScheme::regular(5), e, {5, 10}, stress);
  for (const auto& row : r.rows) EXPECT_EQ(row.worst, 0.0);
  EXPECT_FALSE(r.fit);
  EXPECT_EQ(r.failure, "decay faster than resolvable");
}

TEST(Scan, RegularLengthsMustBeMultiples) {
  ExactEngine e(4, 0.5, 0.0);
  const std::vector<StressConfig> stress{{"all-minus", LayerConfig::constant({-10, 10}, -1)}};
  EXPECT_THROW(decimated_decay_scan(DecimationScheme::regular(2), e, {3}, stress), std::invalid_argument);
}

TEST(Scan, WorstCaseFit) {
  const std::vector<StressConfig> stress{{"a", LayerConfig::all_plus()}, {"b", LayerConfig::all_plus()}};
  auto pot = [](const LayerConfig&, int len) { return std::vector<Estimate>{Estimate::exact(-std::exp(-0.5 * len))}; };
  const auto r = worst_case_scan({1, 2, 3, 4, 5}, stress, pot);
  ASSERT_TRUE(r.fit);
  EXPECT_NEAR(r.fit->lambda, 0.5, 1e-10);
  EXPECT_TRUE(r.pass());
}
