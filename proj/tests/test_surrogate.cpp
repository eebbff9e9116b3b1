#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "smashy/surrogate.hpp"

using namespace smashy;

namespace {

ParamSpace mixed_space() {
  return ParamSpace({ParamDef::categorical("k", {"a", "b", "c"}), ParamDef::continuous("x", 0.0, 1.0),
                     ParamDef::continuous("y", 1.0, 100.0, Scale::log).when("k", {"a", "b"}),
                     ParamDef::integer("n", 1, 8)});
}

double bowl(const ParamSpace& s, const Config& c) {
  const double x = c.values[1] - 0.3;
  double v = x * x + 0.1 * c.values[0];
  if (c.active[2]) v += 0.05 * std::log10(c.values[2]);
  return v + 0.01 * c.values[3];
  (void)s;
}

Archive random_archive(const ParamSpace& s, std::size_t n, std::uint64_t seed, bool mixed_fidelity = false) {
  Rng rng(seed);
  Archive a;
  for (std::size_t i = 0; i < n; ++i) {
    EvalRecord e;
    e.config = s.sample_one(rng);
    e.fidelity = mixed_fidelity && i % 2 ? 0.25 : 1.0;
    e.cost = bowl(s, e.config) + (1.0 - e.fidelity) * 0.2;
    a.append(e);
  }
  return a;
}

}  // namespace

TEST(Gower, NumericCategoricalAndSentinelRules) {
  const std::vector<bool> cat{false, true, false};
  const std::vector<double> a{0.2, 0.5, kInactiveCode}, b{0.6, 0.5, kInactiveCode}, c{0.2, 1.0, 0.3};
  EXPECT_NEAR(gower_distance(a, b, cat), 0.4 / 3.0, 1e-15);
  EXPECT_NEAR(gower_distance(a, c, cat), (0.0 + 1.0 + 1.0) / 3.0, 1e-15);
  EXPECT_EQ(gower_distance(a, a, cat), 0.0);
}

TEST(Samworth, TwoDimensionalWeightsHaveClosedForm) {
  // For d = 2 the bracket telescopes to 2 - (2i - 1)/k, so w_i = (2k - 2i + 1)/k^2.
  const std::size_t k = 7;
  const auto w = samworth_weights(k, 2);
  ASSERT_EQ(w.size(), k);
  for (std::size_t i = 1; i <= k; ++i) {
    EXPECT_NEAR(w[i - 1], static_cast<double>(2 * k - 2 * i + 1) / static_cast<double>(k * k), 1e-15);
  }
  EXPECT_NEAR(w[0], 13.0 / 49.0, 1e-15);
}

TEST(Samworth, WeightsNormalizedAndNonincreasing) {
  for (std::size_t d : {1u, 2u, 3u, 5u, 10u, 40u}) {
    for (std::size_t k : {1u, 2u, 7u, 20u}) {
      const auto w = samworth_weights(k, d);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-9) << "d=" << d << " k=" << k;
      for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_GE(w[i], 0.0);
        if (i) {
          EXPECT_LE(w[i], w[i - 1] + 1e-15);
        }
      }
    }
  }
  EXPECT_THROW(samworth_weights(0, 2), InductionError);
}

TEST(Knn1, ReproducesTrainingTarget) {
  ParamSpace s({ParamDef::continuous("x", 0.0, 1.0)});
  Archive a;
  a.append({Config{{0.4}, {true}}, 1.0, 5.0});
  const auto m = induce(SurrogateKind::knn1, s, a, true);
  EXPECT_EQ(m.predict(s.encode(Config{{0.4}, {true}}), 1.0), 5.0);
}

TEST(Knn1, ExactAtAllTrainingPoints) {
  const auto s = mixed_space();
  const auto a = random_archive(s, 80, 3);
  const auto m = induce(SurrogateKind::knn1, s, a, true);
  for (const auto& r : a.records()) EXPECT_EQ(m.predict(s.encode(r.config), 1.0), r.cost);
}

TEST(Knn1, EquidistantNeighborsBreakTowardEarlierRow) {
  ParamSpace s({ParamDef::continuous("x", 0.0, 1.0)});
  Archive a;
  a.append({Config{{0.25}, {true}}, 1.0, 7.0});
  a.append({Config{{0.75}, {true}}, 1.0, 3.0});
  const auto m = induce(SurrogateKind::knn1, s, a, true);
  EXPECT_EQ(m.predict(s.encode(Config{{0.5}, {true}}), 1.0), 7.0);
}

TEST(Kknn7, WeightedMeanOfNeighbors) {
  ParamSpace s({ParamDef::continuous("x", 0.0, 1.0)});
  Archive a;
  for (int i = 0; i < 9; ++i) a.append({Config{{i / 8.0}, {true}}, 1.0, static_cast<double>(i)});
  const auto m = induce(SurrogateKind::kknn7, s, a, true);
  // Query at 0: neighbors are rows 0..6 in order; d = 1.
  const auto w = samworth_weights(7, 1);
  double expected = 0.0;
  for (int i = 0; i < 7; ++i) expected += w[static_cast<std::size_t>(i)] * i;
  EXPECT_NEAR(m.predict(s.encode(Config{{0.0}, {true}}), 1.0), expected, 1e-12);
}

TEST(Tpe, ScoresGoodRegionLowerOnGrid) {
  ParamSpace s({ParamDef::continuous("x", 0.0, 1.0)});
  Archive a;
  a.append({Config{{0.2}, {true}}, 1.0, 0.0});
  a.append({Config{{0.8}, {true}}, 1.0, 1.0});
  SurrogateOptions opts;
  opts.min_good = 1;
  const auto m = induce(SurrogateKind::tpe, s, a, true, opts);
  EXPECT_LT(m.predict(std::vector<double>{0.2}, 1.0), m.predict(std::vector<double>{0.8}, 1.0));
  // Oracle: each set holds one point, so both bandwidths sit at the 1e-3 floor
  // and -l/g is a ratio of two Gaussians evaluated directly.
  const double h = 1e-3;
  auto oracle = [&](double x) {
    const double zl = (x - 0.2) / h, zg = (x - 0.8) / h;
    return -std::exp(-0.5 * zl * zl + 0.5 * zg * zg);
  };
  for (double x : {0.4996, 0.4999, 0.5, 0.5001, 0.5004}) {
    EXPECT_NEAR(m.predict(std::vector<double>{x}, 1.0) / oracle(x), 1.0, 1e-9) << x;
  }
}

TEST(Tpe, NeedsTwoDistinctConfigs) {
  ParamSpace s({ParamDef::continuous("x", 0.0, 1.0)});
  Archive a;
  a.append({Config{{0.2}, {true}}, 0.5, 0.0});
  a.append({Config{{0.2}, {true}}, 1.0, 1.0});
  EXPECT_THROW(induce(SurrogateKind::tpe, s, a, true), InductionError);
  EXPECT_THROW(induce(SurrogateKind::knn1, s, Archive{}, true), InductionError);
}

TEST(Surrogates, RankingInvariantUnderAffineCostTransform) {
  const auto s = mixed_space();
  const auto a = random_archive(s, 60, 9);
  Archive b;
  for (auto r : a.records()) {
    r.cost = 3.0 * r.cost + 11.0;
    b.append(r);
  }
  Rng rng(4);
  const auto cands = s.sample_uniform(200, rng);
  for (auto kind : {SurrogateKind::knn1, SurrogateKind::kknn7, SurrogateKind::tpe, SurrogateKind::rf}) {
    SurrogateOptions opts;
    opts.seed = 17;
    const auto ma = induce(kind, s, a, true, opts);
    const auto mb = induce(kind, s, b, true, opts);
    const auto sa = ma.score(s, cands, 1.0), sb = mb.score(s, cands, 1.0);
    if (kind == SurrogateKind::tpe) {
      EXPECT_EQ(sa, sb);
      continue;
    }
    // Predictions are affine in y, so b = 3a + 11 up to rounding and every
    // pair that is not a floating-point near-tie keeps its order.
    for (std::size_t i = 0; i < sa.size(); ++i) {
      EXPECT_NEAR(sb[i], 3.0 * sa[i] + 11.0, 1e-9) << to_string(kind);
      for (std::size_t j = 0; j < sa.size(); ++j) {
        if (sa[i] < sa[j] - 1e-12) {
          EXPECT_LT(sb[i], sb[j]) << to_string(kind);
        }
      }
    }
  }
}

TEST(Surrogates, FilterMbIgnoresQueryFidelity) {
  const auto s = mixed_space();
  const auto a = random_archive(s, 60, 12, true);
  Rng rng(6);
  const auto cands = s.sample_uniform(50, rng);
  SurrogateOptions opts;
  opts.r_min = 0.25;
  for (auto kind : {SurrogateKind::knn1, SurrogateKind::kknn7, SurrogateKind::rf}) {
    const auto m = induce(kind, s, a, true, opts);
    EXPECT_EQ(m.score(s, cands, 0.25), m.score(s, cands, 1.0));
    const auto f = induce(kind, s, a, false, opts);
    EXPECT_NE(f.score(s, cands, 0.25), f.score(s, cands, 1.0)) << to_string(kind);
  }
}

TEST(Surrogates, DeterministicGivenData) {
  const auto s = mixed_space();
  const auto a = random_archive(s, 40, 2);
  Rng rng(1);
  const auto cands = s.sample_uniform(30, rng);
  SurrogateOptions opts;
  opts.seed = 99;
  for (auto kind : {SurrogateKind::knn1, SurrogateKind::kknn7, SurrogateKind::tpe, SurrogateKind::rf}) {
    EXPECT_EQ(induce(kind, s, a, false, opts).score(s, cands, 0.5), induce(kind, s, a, false, opts).score(s, cands, 0.5));
  }
}

TEST(RandomForest, FitsStepFunctionAndReportsSpread) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 100; ++i) {
    x.push_back({i / 99.0});
    y.push_back(i < 50 ? 0.0 : 1.0);
  }
  RandomForest f;
  f.fit(x, y, 3);
  EXPECT_LT(f.predict(std::vector<double>{0.1}), 0.1);
  EXPECT_GT(f.predict(std::vector<double>{0.9}), 0.9);
  const auto [m, sd] = f.predict_mean_sd(std::vector<double>{0.1});
  EXPECT_GE(sd, 0.0);
  (void)m;

  RandomForest flat;
  flat.fit(x, std::vector<double>(100, 2.0), 3);
  const auto [fm, fsd] = flat.predict_mean_sd(std::vector<double>{0.5});
  EXPECT_EQ(fm, 2.0);
  EXPECT_EQ(fsd, 0.0);
}

TEST(MixedKde, SamplesStayInEncodedDomain) {
  const auto s = mixed_space();
  const auto a = random_archive(s, 30, 5);
  std::vector<std::vector<double>> pts;
  for (const auto& r : a.records()) pts.push_back(s.encode(r.config));
  std::vector<std::size_t> levels;
  for (std::size_t i = 0; i < s.size(); ++i) levels.push_back(s.num_levels(i));
  MixedKde kde(pts, s.categorical_mask(), levels);
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto v = kde.sample(rng);
    for (double x : v) EXPECT_TRUE(x == kInactiveCode || (x >= 0.0 && x <= 1.0));
    EXPECT_TRUE(std::isfinite(kde.log_density(v)));
  }
}

TEST(MixedKde, OneDimensionalDensityIntegratesToOne) {
  // Points far from the boundary so the untruncated Gaussian mass stays inside.
  MixedKde kde({{0.4}, {0.5}, {0.55}, {0.6}}, {false}, {0});
  double integral = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    integral += std::exp(kde.log_density(std::vector<double>{x})) / n;
  }
  EXPECT_NEAR(integral, 1.0, 1e-3);
}

TEST(MixedKde, CategoricalMassSumsToOne) {
  MixedKde kde({{0.0}, {0.5}, {0.5}, {1.0}}, {true}, {3});
  double total = 0.0;
  for (double x : {0.0, 0.5, 1.0}) total += std::exp(kde.log_density(std::vector<double>{x}));
  EXPECT_NEAR(total, 1.0, 1e-12);
}
