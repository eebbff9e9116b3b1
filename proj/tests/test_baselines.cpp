#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "smashy/baselines.hpp"

using namespace smashy;

namespace {

Objective flat(double r_min) {
  Objective o;
  o.name = "flat";
  o.space = ParamSpace({ParamDef::continuous("x", 0.0, 1.0)});
  o.r_min = r_min;
  o.model = [](const Config& c, double r, std::uint64_t) { return c.values[0] + (1.0 - r); };
  return o;
}

// Hyperband batch sizes ceil(s * eta^(s-b) / (s-b+1)) with s = floor(-log_eta r_min) + 1.
std::vector<std::size_t> hb_row(double eta, double r_min) {
  const auto s = static_cast<std::size_t>(std::floor(-std::log(r_min) / std::log(eta) + 1e-9)) + 1;
  std::vector<std::size_t> mu;
  for (std::size_t b = 1; b <= s; ++b) {
    const double sb = static_cast<double>(s - b);
    mu.push_back(static_cast<std::size_t>(std::ceil(static_cast<double>(s) * std::pow(eta, sb) / (sb + 1.0) - 1e-9)));
  }
  return mu;
}

}  // namespace

TEST(Preset, NamesRoundTrip) {
  for (auto p : {Preset::rs, Preset::sh, Preset::hb, Preset::bohb}) EXPECT_EQ(parse_preset(to_string(p)), p);
  EXPECT_FALSE(parse_preset("smac").has_value());
}

TEST(Preset, RandomSearchRow) {
  const auto row = project(preset(Preset::rs, 3.0, 1.0 / 27.0, 0, 10.0), 1.0 / 27.0);
  EXPECT_FALSE(row.mu.has_value());
  EXPECT_EQ(row.s, 1u);
  EXPECT_FALSE(row.eta_surv.has_value());
  EXPECT_FALSE(row.eta_budget.has_value());
  EXPECT_FALSE(row.inducer.has_value());
  EXPECT_EQ(row.rho, 1.0);
  EXPECT_FALSE(row.ns.has_value());
  EXPECT_FALSE(row.batch_mode.has_value());
  EXPECT_EQ(row.generating, GeneratingKind::uniform);
}

TEST(Preset, HyperbandRow) {
  for (double eta : {2.0, 3.0, 4.0}) {
    for (double r_min : {1.0 / 27.0, 1.0 / 32.0, 0.1}) {
      const auto row = project(preset(Preset::hb, eta, r_min, 0, 10.0), r_min);
      const auto want = hb_row(eta, r_min);
      ASSERT_TRUE(row.mu.has_value());
      EXPECT_EQ(*row.mu, want) << eta << " " << r_min;
      EXPECT_EQ(row.s, want.size());
      EXPECT_EQ(row.eta_surv, eta);
      EXPECT_EQ(row.eta_budget, eta);
      EXPECT_FALSE(row.inducer.has_value());
      EXPECT_EQ(row.rho, 1.0);
      EXPECT_FALSE(row.ns.has_value());
      EXPECT_EQ(row.batch_mode, BatchMethod::hb);
      EXPECT_EQ(row.generating, GeneratingKind::uniform);
    }
  }
}

TEST(Preset, HyperbandFirstBracketsAndFidelities) {
  const auto sc = plan_schedule(preset(Preset::hb, 3.0, 1.0 / 27.0, 0, 10.0), 1.0 / 27.0);
  EXPECT_EQ(sc.mu, (std::vector<std::size_t>{27, 12, 6, 4}));
  for (std::size_t b = 1; b <= 4; ++b) {
    EXPECT_NEAR(sc.brackets[b - 1].fidelities.front(), std::pow(3.0, static_cast<double>(b) - 4.0), 1e-15);
  }
}

TEST(Preset, BohbRow) {
  const auto row = project(preset(Preset::bohb, 3.0, 1.0 / 27.0, 0, 10.0), 1.0 / 27.0);
  EXPECT_EQ(*row.mu, hb_row(3.0, 1.0 / 27.0));
  EXPECT_EQ(row.eta_surv, 3.0);
  EXPECT_EQ(row.eta_budget, 3.0);
  EXPECT_EQ(row.inducer, SurrogateKind::tpe);
  EXPECT_DOUBLE_EQ(row.rho, 1.0 / 3.0);
  EXPECT_EQ(row.ns, 64.0);
  EXPECT_EQ(row.batch_mode, BatchMethod::hb);
  EXPECT_EQ(row.generating, GeneratingKind::kde);
}

TEST(Preset, BohbDiffersFromHyperbandOnlyInSurrogateFields) {
  auto hb = preset(Preset::hb, 3.0, 1.0 / 27.0, 0, 10.0);
  const auto bohb = preset(Preset::bohb, 3.0, 1.0 / 27.0, 0, 10.0);
  EXPECT_NE(hb, bohb);
  hb.sample = bohb.sample;
  hb.surrogate_learner = bohb.surrogate_learner;
  hb.rho_0 = bohb.rho_0;
  hb.rho_1 = bohb.rho_1;
  hb.ns0_0 = bohb.ns0_0;
  hb.ns0_1 = bohb.ns0_1;
  hb.ns1_0 = bohb.ns1_0;
  hb.ns1_1 = bohb.ns1_1;
  EXPECT_EQ(hb, bohb);
}

TEST(Preset, SuccessiveHalvingIsOneBracketWithoutRefill) {
  const auto spec = preset(Preset::sh, 3.0, 1.0 / 27.0, 0, 10.0);
  EXPECT_EQ(spec.batch_method, BatchMethod::equal);
  EXPECT_FALSE(spec.refill);
  const auto sc = plan_schedule(spec, 1.0 / 27.0);
  ASSERT_EQ(sc.brackets.size(), 1u);
  EXPECT_EQ(sc.brackets[0].stage_sizes, (std::vector<std::size_t>{27, 9, 3, 1}));
  const auto row = project(spec, 1.0 / 27.0);
  EXPECT_EQ(row.batch_mode, BatchMethod::equal);
  EXPECT_EQ(row.rho, 1.0);
}

TEST(Preset, RandomSearchEvaluatesOnlyFullFidelity) {
  const auto archive = run(preset(Preset::rs, 3.0, 1.0 / 32.0, 0, 25.0), flat(1.0 / 32.0), 7);
  EXPECT_EQ(archive.size(), 25u);
  for (const auto& r : archive.records()) EXPECT_EQ(r.fidelity, 1.0);
}

TEST(Preset, ExplicitFirstBatchSize) {
  const auto spec = preset(Preset::hb, 3.0, 1.0 / 27.0, 54, 10.0);
  EXPECT_EQ(spec.mu, 54u);
  EXPECT_EQ(plan_schedule(spec, 1.0 / 27.0).mu.front(), 54u);
  EXPECT_THROW(preset(Preset::hb, 1.0, 0.5, 0, 10.0), SpecError);
}
