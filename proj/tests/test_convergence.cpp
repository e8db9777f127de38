#include <gtest/gtest.h>

#include <cmath>

#include <layergibbs/convergence.hpp>
#include <layergibbs/transfer.hpp>

using namespace layergibbs;

TEST(Ell, AllPlusIsOne) {
  for (auto d : {Direction::plus, Direction::minus}) EXPECT_EQ(ell(0, LayerConfig::all_plus(), 1.0, d), 1);
}

TEST(Ell, SingleMinus) {
  const LayerConfig x = LayerConfig::constant({0, 0}, -1);
  EXPECT_EQ(ell(0, x, 1.0, Direction::plus), 18);
  EXPECT_EQ(ell(0, x, 1.0, Direction::minus), 18);
  // the strict comparison excludes the equality at k = 18
  EXPECT_EQ(ell(0, x, 1.0, Direction::plus, true), 19);
}

TEST(Ell, RejectsBadInput) {
  EXPECT_THROW(ell(0, LayerConfig::all_plus(), 0.9, Direction::plus), std::invalid_argument);
  EXPECT_THROW(ell(0, LayerConfig::all_plus(), 1.2, Direction::plus), std::invalid_argument);
  EXPECT_THROW(ell(0, LayerConfig::constant({0, 0}, 1, -1), 1.0, Direction::plus), std::invalid_argument);
}

TEST(Ell, WideMinusWindowScalesWithWidth) {
  const LayerConfig x = LayerConfig::constant({0, 19}, -1);
  const int l = ell(0, x, 1.0, Direction::plus);
  // sum over k sites is k - 40 once k >= 20; avg >= 8/9 from k = 360 on
  EXPECT_EQ(l, 360);
}

TEST(Ell, ProfileAndTata) {
  const auto p = ell_profile(LayerConfig::all_plus(), {-3, 3}, 1.0, Direction::minus);
  EXPECT_EQ(p.values.size(), 7u);
  EXPECT_EQ(p.at(0), 1);
  EXPECT_THROW(p.at(9), std::out_of_range);
  EXPECT_EQ(tata_count(0, p), 2);
  const auto w = omega_U_member(LayerConfig::all_plus(), {-2, 2});
  EXPECT_TRUE(w.member);
  EXPECT_FALSE(omega_U_member(LayerConfig::constant({0, 0}, 1, -1), {-2, 2}).member);
}

TEST(DecayFit, RecoversKnownRate) {
  std::vector<DecayPoint> c;
  for (int l = 1; l <= 10; ++l) c.push_back({l, 3.0 * std::exp(-0.7 * l), 0.0});
  const auto f = decay_fit(c);
  EXPECT_NEAR(f.lambda, 0.7, 1e-10);
  EXPECT_NEAR(f.c, 3.0, 1e-9);
  EXPECT_TRUE(f.positive());
}

TEST(DecayFit, UnresolvableBelowFloor) {
  std::vector<DecayPoint> c;
  for (int l = 1; l <= 10; ++l) c.push_back({l, l < 3 ? 1e-3 : 1e-20, 0.0});
  EXPECT_THROW(decay_fit(c), DecayUnresolvable);
  try {
    decay_fit(c);
  } catch (const DecayUnresolvable& e) {
    EXPECT_STREQ(e.what(), "decay faster than resolvable");
  }
}

TEST(DecayFit, NoisyPointsDropped) {
  std::vector<DecayPoint> c;
  for (int l = 1; l <= 8; ++l) c.push_back({l, std::exp(-l), l > 5 ? 1.0 : 0.0});
  const auto f = decay_fit(c);
  EXPECT_EQ(f.used.size(), 5u);
}

TEST(ConvergenceSum, TailFlags) {
  PotentialTable t;
  t.set({0, 0}, Estimate::exact(-1.0));
  t.set({-1, 0}, Estimate::exact(-0.5));
  t.set({-3, 2}, Estimate::exact(-0.25));
  const auto s = abs_convergence_sum(0, t, 2, std::nullopt);
  EXPECT_DOUBLE_EQ(s.partial, 1.5);
  EXPECT_FALSE(s.tail_bounded);
  DecayFit f;
  f.c = 1.0;
  f.lambda = 1.0;
  const auto s2 = abs_convergence_sum(0, t, 2, f);
  EXPECT_TRUE(s2.tail_bounded);
  double direct = 0.0;
  for (int l = 3; l < 400; ++l) direct += (l + 1) * std::exp(-1.0 * l);
  EXPECT_NEAR(s2.tail, direct, 1e-12);
}

TEST(Hope, FlagsViolations) {
  PotentialTable t;
  t.set({-2, 0}, Estimate::exact(-5.0));
  const auto p = ell_profile(LayerConfig::all_plus(), {-3, 3}, 1.0, Direction::minus);
  EXPECT_EQ(check_hope_bound(t, p, 10.0, 1.0, 1.0).size(), 1u);
  EXPECT_TRUE(check_hope_bound(t, p, 10.0, 100.0, 1.0).empty());
}

TEST(ConstrainedCov, DecaysUnderMinusLayer) {
  ExactEngine e(4, 0.4, 0.0);
  const auto d = constrained_cov_decay(LayerConfig::constant({-4, 4}, -1), 4, e);
  ASSERT_EQ(d.cov.size(), 4u);
  EXPECT_GT(d.cov[0].value, d.cov[3].value);
  EXPECT_TRUE(d.resolved);
  EXPECT_GT(d.rate, 0.0);
}

TEST(Ell, MonotoneInAlphaAndConfiguration) {
  const LayerConfig a({-4, 4}, {-1, 1, -1, 1, 1, -1, 1, 1, -1});
  const LayerConfig b = a.with(std::vector<int>{-2, 1}, 1);  // more plusses
  for (int i = -4; i <= 4; ++i)
    for (auto d : {Direction::plus, Direction::minus}) {
      EXPECT_LE(ell(i, a, 1.0, d), ell(i, a, 1.1, d));
      EXPECT_GE(ell(i, a, 1.0, d), ell(i, b, 1.0, d));
    }
}
