#include <gtest/gtest.h>

#include <cmath>

#include "acceval/config.hpp"
#include "acceval/scenario_model.hpp"

using namespace acceval;

namespace {

const ScenarioModel& model() {
  static const ScenarioModel m = ModelConfig::defaults().build();
  return m;
}

}  // namespace

TEST(LambdaTtc, NodesMidpointsAndExtrapolation) {
  const auto& m = model();
  EXPECT_DOUBLE_EQ(lambda_ttc(12.5, m), 0.046);
  EXPECT_DOUBLE_EQ(lambda_ttc(15.0, m), 0.5 * (0.046 + 0.039));
  // Beyond 37.5 the last segment (slope -0.0004 per m/s) extrapolates.
  EXPECT_NEAR(lambda_ttc(45.0, m), 0.021 - 0.0004 * 7.5, 1e-15);
  EXPECT_DOUBLE_EQ(lambda_ttc(200.0, m), m.lambda_floor());
  // The first segment extrapolates upward below 7.5.
  EXPECT_NEAR(lambda_ttc(5.0, m), 0.056 + 0.002 * 2.5, 1e-15);
}

TEST(LambdaTtc, BinMinimum) {
  const auto& m = model();
  EXPECT_DOUBLE_EQ(m.min_lambda_ttc(5.0, 15.0), lambda_ttc(15.0, m));
  EXPECT_DOUBLE_EQ(m.min_lambda_ttc(25.0, 40.0), lambda_ttc(40.0, m));
}

TEST(Kinematics, Examples) {
  const auto k = derive_kinematics(10.0, 0.05, 0.2);
  EXPECT_DOUBLE_EQ(k.rdot, -4.0);
  EXPECT_DOUBLE_EQ(k.v0, 14.0);
  EXPECT_DOUBLE_EQ(k.r0, 20.0);
  const auto still = derive_kinematics(10.0, 0.05, 0.0);
  EXPECT_EQ(still.rdot, 0.0);
  EXPECT_EQ(still.v0, 10.0);
  EXPECT_THROW(derive_kinematics(10.0, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(derive_kinematics(10.0, -0.1, 0.1), std::invalid_argument);
}

TEST(SampleScenario, OriginalLawHasUnitLikelihood) {
  const auto& m = model();
  for (std::uint64_t i = 0; i < 2000; ++i) {
    RandomStream rng(5, {1, i});
    const auto s = sample_scenario(m, nullptr, m.bin("low"), rng);
    ASSERT_EQ(s.likelihood, 1.0);
    ASSERT_DOUBLE_EQ(s.rdot * s.r_inv, -s.ttc_inv);
    ASSERT_GE(s.v0, s.v_l);
    ASSERT_GE(s.v_l, 5.0);
    ASSERT_LE(s.v_l, 15.0);
  }
}

TEST(SampleScenario, IdentityTiltLikelihoodIsDensityRatio) {
  const auto& m = model();
  const ProposalParams zero{0.0, 0.0, "medium"};
  const auto approx = m.r_inv_exp_approx();
  for (std::uint64_t i = 0; i < 500; ++i) {
    RandomStream rng(6, {2, i});
    const auto s = sample_scenario(m, &zero, m.bin("medium"), rng);
    const double expected = m.r_inv().pdf(s.r_inv) / approx.pdf(s.r_inv);
    ASSERT_NEAR(s.likelihood, expected, 1e-12 * expected);
    ASSERT_NEAR(likelihood_ratio(s, m, zero), expected, 1e-12 * expected);
  }
}

TEST(SampleScenario, Deterministic) {
  const auto& m = model();
  const ProposalParams p{-0.12, 0.01, "high"};
  RandomStream a(7, {3, 9}), b(7, {3, 9});
  const auto x = sample_scenario(m, &p, m.bin("high"), a);
  const auto y = sample_scenario(m, &p, m.bin("high"), b);
  EXPECT_EQ(x.v_l, y.v_l);
  EXPECT_EQ(x.r_inv, y.r_inv);
  EXPECT_EQ(x.ttc_inv, y.ttc_inv);
  EXPECT_EQ(x.likelihood, y.likelihood);
}

// E_proposal[L] = 1 for every valid tilt.
TEST(SampleScenario, MeanLikelihoodIsOne) {
  const auto& m = model();
  for (const ProposalParams& p : {ProposalParams{-0.12, 0.0, "low"}, ProposalParams{0.0, -0.3, "medium"},
                                  ProposalParams{0.0, 0.01, "high"}}) {
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      RandomStream rng(31, {4, static_cast<std::uint64_t>(i)});
      const double l = sample_scenario(m, &p, m.bin(p.bin), rng).likelihood;
      s += l;
      s2 += l * l;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, 1.0, 3.0 * se) << p.vartheta_r << " " << p.vartheta_ttc;
  }
}

TEST(Proposal, Validation) {
  const auto& m = model();
  EXPECT_NO_THROW(validate_proposal(m, {-5.0, -5.0, "low"}));
  EXPECT_THROW(validate_proposal(m, {m.lambda_r(), 0.0, "low"}), std::invalid_argument);
  // The smallest lambda_TTC in the low bin sits at 15 m/s.
  const double cap = lambda_ttc(15.0, m);
  EXPECT_NO_THROW(validate_proposal(m, {0.0, cap * 0.99, "low"}));
  EXPECT_THROW(validate_proposal(m, {0.0, cap, "low"}), std::invalid_argument);
  EXPECT_THROW(validate_proposal(m, {0.0, 0.0, "nope"}), std::invalid_argument);
}

TEST(ScenarioModelConstruction, Validation) {
  auto cfg = ModelConfig::defaults();
  auto bad = cfg;
  bad.ttc_table = {{10.0, 0.05}, {10.0, 0.04}};
  EXPECT_THROW(bad.build(), std::invalid_argument);
  bad = cfg;
  bad.ttc_table = {{10.0, 0.05}, {20.0, 0.0}};
  EXPECT_THROW(bad.build(), std::invalid_argument);
  bad = cfg;
  bad.bins = {{"a", 5.0, 15.0}, {"b", 14.0, 25.0}};
  EXPECT_THROW(bad.build(), std::invalid_argument);
  bad = cfg;
  bad.bins = {{"a", 5.0, 15.0}, {"a", 15.0, 25.0}};
  EXPECT_THROW(bad.build(), std::invalid_argument);

  const double lr = model().lambda_r();
  auto pinned = cfg;
  pinned.lambda_r = lr;
  EXPECT_DOUBLE_EQ(pinned.build().lambda_r(), lr);
  pinned.lambda_r = lr * 1.001;
  EXPECT_THROW(pinned.build(), std::invalid_argument);
}
