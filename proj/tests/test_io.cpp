#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include <layergibbs/io.hpp>

using namespace layergibbs;

TEST(Io, LayerConfigRoundTrip) {
  for (const auto& x : {LayerConfig::alternating({-3, 2}), LayerConfig::constant({0, 4}, -1, -1), LayerConfig::all_plus()}) {
    const auto y = parse_layer_config(x.to_string());
    EXPECT_EQ(x, y) << x.to_string();
  }
  EXPECT_THROW(parse_layer_config("0,1]+|+"), std::invalid_argument);
  EXPECT_THROW(parse_layer_config("[0,1]+x|+"), std::invalid_argument);
}

TEST(Io, EstimateRoundTrip) {
  Estimate e{1.25, 0.5, 1000, EngineTag::mc, 42};
  const auto f = estimate_from_json(to_json(e));
  EXPECT_EQ(f.value, e.value);
  EXPECT_EQ(f.error, e.error);
  EXPECT_EQ(f.n_samples, e.n_samples);
  EXPECT_EQ(f.engine, e.engine);
  EXPECT_EQ(f.seed, e.seed);
}

TEST(Io, TableRoundTripIsExact) {
  PotentialTable t;
  t.xi = LayerConfig::alternating({-2, 2});
  t.beta = 0.6;
  t.n = 3;
  t.engine_name = "transfer";
  t.set({-1, 1}, Estimate::exact(-0.13796982113358697));
  t.set({1, 1}, Estimate::exact(0.1 + 0.2));
  const auto u = table_from_json(json::parse(to_json(t).dump()));
  EXPECT_EQ(u.entries.size(), 2u);
  EXPECT_EQ(u.value({-1, 1}), t.value({-1, 1}));
  EXPECT_EQ(u.value({1, 1}), t.value({1, 1}));
  EXPECT_EQ(to_json(u).dump(), to_json(t).dump());
  EXPECT_EQ(table_csv(t).substr(0, 17), "j,k,value,stderr\n");
}

TEST(Io, ManifestHashIgnoresWallClock) {
  RunManifest a;
  a.command = "potential";
  a.config = {{"beta", 0.6}};
  a.seeds = {1};
  RunManifest b = a;
  b.wall_seconds = 12.0;
  EXPECT_EQ(a.hash(), b.hash());
  b.seeds = {2};
  EXPECT_NE(a.hash(), b.hash());
  const auto c = RunManifest::from_json(a.to_json());
  EXPECT_EQ(c.hash(), a.hash());
}

TEST(Io, PlotCsvHeader) {
  const auto s = plot_csv({{1.0, 2.0, 0.1, "u"}}, "abc");
  EXPECT_EQ(s, "# manifest abc\nx,y,y_err,series_label\n1,2,0.10000000000000001,u\n");
}

TEST(Io, GoldenStoreRoundTrip) {
  GoldenStore g;
  g.put("logZ box=1 beta=0.5", 0.19606893692021776);
  const auto path = std::filesystem::temp_directory_path() / "layergibbs_golden_test.json";
  g.save(path.string());
  const auto h = GoldenStore::load(path.string());
  std::filesystem::remove(path);
  ASSERT_TRUE(h.get("logZ box=1 beta=0.5"));
  EXPECT_EQ(*h.get("logZ box=1 beta=0.5"), 0.19606893692021776);
  EXPECT_FALSE(h.get("missing"));
}

TEST(Io, Fnv1aKnownValue) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}
