#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "adsurv/combo_test.hpp"
#include "adsurv/sim_engine.hpp"
#include "oracles.hpp"

using namespace adsurv;

namespace {
struct QuietWarnings : ::testing::Environment {
  void SetUp() override { set_warnings_enabled(false); }
};
const auto* const kQuiet = ::testing::AddGlobalTestEnvironment(new QuietWarnings);
}  // namespace

TEST(PValues, FirstStage) {
  EXPECT_EQ(p1_first_stage(0.0, 37), 0.5);
  EXPECT_NEAR(p1_first_stage(7.6, 151), 0.108, 5e-4);
  EXPECT_NEAR(p1_first_stage(5.0, 100), 1.0 - oracle::phi_series(1.0), 1e-14);
  EXPECT_THROW(p1_first_stage(1.0, 0), ZeroEvents);
}

TEST(PValues, SecondStage) {
  EXPECT_EQ(p2_second_stage(0.0, 10), 0.5);
  EXPECT_NEAR(p2_second_stage(10.0, 100), 0.02275, 1e-5);
  double prev = 1.0;
  for (double s = -10.0; s <= 10.0; s += 0.5) {
    const double p = p2_second_stage(s, 50);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(PValues, Increment) {
  EXPECT_NEAR(p2_increment(25.0, 16.0, 350, 199), 0.071, 1e-3);
  EXPECT_EQ(p2_increment(4.0, 4.0, 20, 10), 0.5);
  EXPECT_DOUBLE_EQ(p2_increment(10.0, 0.0, 100, 0), p2_second_stage(10.0, 100));
  EXPECT_THROW(p2_increment(1.0, 0.0, 10, 10), DegenerateIncrement);
}

TEST(Weights, Jenkins) {
  const auto w = jenkins_weights(100, 100);
  EXPECT_NEAR(w.w1(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(w.w2(), 1.0 / std::sqrt(2.0), 1e-15);
  const auto v = jenkins_weights(170, 78);
  EXPECT_NEAR(v.w1(), std::sqrt(170.0 / 248.0), 1e-15);
  EXPECT_NEAR(v.w2(), std::sqrt(78.0 / 248.0), 1e-15);
  for (int a = 1; a < 60; a += 7) {
    for (int b = 1; b < 60; b += 5) {
      const auto x = jenkins_weights(a, b);
      EXPECT_NEAR(x.w1() * x.w1() + x.w2() * x.w2(), 1.0, 1e-14);
    }
  }
  EXPECT_THROW(jenkins_weights(0, 5), ValidationError);
}

TEST(Weights, Irle) {
  EXPECT_NEAR(irle_weights(151, 248).w1(), 0.7803, 1e-4);
  EXPECT_EQ(irle_weights(248, 248).w1(), 1.0);
  EXPECT_EQ(irle_weights(248, 248).w2(), 0.0);
  EXPECT_EQ(irle_weights(0, 248).w1(), 0.0);
  EXPECT_EQ(irle_weights(0, 248).w2(), 1.0);
  EXPECT_THROW(irle_weights(249, 248), ValidationError);
}

TEST(Weights, MakeRenormalisesOnlyTinyDeviations) {
  const auto w = Weights::make(0.6 * (1 + 1e-11), 0.8);
  EXPECT_NEAR(std::hypot(w.w1(), w.w2()), 1.0, 1e-15);
  EXPECT_THROW(Weights::make(0.6, 0.81), ValidationError);
  EXPECT_THROW(Weights::make(-0.6, 0.8), ValidationError);
}

TEST(Combine, WorkedExample) {
  const auto w = irle_weights(151, 248);
  const double z = combine(w, {0.108, 0.071});
  EXPECT_NEAR(z, 1.88, 0.01);
  EXPECT_FALSE(decide(z, z_from_p(0.025)).reject);
}

TEST(Combine, Degenerate) {
  EXPECT_EQ(combine(jenkins_weights(5, 5), {0.5, 0.5}), 0.0);
  const auto w = Weights::make(1.0, 0.0);
  for (double p2 : {0.01, 0.5, 0.99}) EXPECT_EQ(combine(w, {0.2, p2}), z_from_p(0.2));
}

TEST(Combine, StrictlyDecreasingInEachP) {
  const auto w = jenkins_weights(3, 4);
  for (double p = 0.05; p < 0.95; p += 0.05) {
    EXPECT_GT(combine(w, {p, 0.3}), combine(w, {p + 0.01, 0.3}));
    EXPECT_GT(combine(w, {0.3, p}), combine(w, {0.3, p + 0.01}));
  }
}

TEST(ZStarNaive, WorkedExample) {
  const auto w = irle_weights(151, 248);
  const double z_star = z_star_naive(w, 16.0, 199, p2_increment(25.0, 16.0, 350, 199));
  EXPECT_NEAR(z_star, 2.69, 0.01);
  EXPECT_TRUE(decide(z_star, 2.41).reject);
  EXPECT_EQ(z_star_naive(w, 0.0, 10, 0.5), 0.0);
}

TEST(ZStarNaive, EqualsCombineWhenFrozenAtT1) {
  const auto w = irle_weights(120, 248);
  for (double s1 : {-3.0, 0.0, 2.5, 7.75}) {
    const double p1 = p1_first_stage(s1, 120);
    EXPECT_EQ(z_star_naive(w, s1, 120, 0.2), combine(w, {p1, 0.2}));
  }
}

TEST(Decide, StrictInequality) {
  EXPECT_FALSE(decide(1.88, 1.96).reject);
  EXPECT_TRUE(decide(2.69, 2.41).reject);
  EXPECT_FALSE(decide(1.96, 1.96).reject);
}

TEST(Clamp, ExtremePValuesStayFinite) {
  EXPECT_TRUE(std::isfinite(z_from_p(0.0)));
  EXPECT_TRUE(std::isfinite(z_from_p(1.0)));
  EXPECT_NEAR(z_from_p(0.0), -norm_quantile(kPValueFloor), 1e-12);
}

TEST(Combine, IndependentUniformsGiveLevelAlpha) {
  RngStream rng(4);
  const auto w = jenkins_weights(2, 3);
  const double cut = z_from_p(0.025);
  const int n = 200000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += decide(combine(w, {rng.uniform(), rng.uniform()}), cut).reject;
  const double rate = static_cast<double>(hits) / n;
  EXPECT_NEAR(rate, 0.025, 3.0 * std::sqrt(0.025 * 0.975 / n));
}

TEST(PValues, FirstStageIsValidUnderNull) {
  // Empirical CDF of p1 at a fixed event-driven T1, null hazards.
  ScenarioConfig sc;
  sc.control = Exponential{0.05};
  sc.experimental = Exponential{0.05};
  sc.accrual_rate = 24;
  sc.accrual_months = 10;
  sc.followup_months = 20;
  sc.interim = {Interim::Kind::AtMonth, 5.0};
  sc.design = {0.025, 0.2, 0.3, 150, JenkinsRule{60, 90}};
  const int reps = 3000;
  std::vector<double> p1s;
  for (int r = 0; r < reps; ++r) {
    RngStream rng = RngStream::derive(515, r);
    const auto trial = simulate_trial(sc, rng);
    const auto first = select_stage(trial.subjects, Stage::First);
    const auto s = snapshot(first, calendar_time_of_event_count(first, 60));
    p1s.push_back(p1_first_stage(s.score, s.d_events));
  }
  for (int k = 1; k <= 19; ++k) {
    const double u = k * 0.05;
    const double frac =
        static_cast<double>(std::count_if(p1s.begin(), p1s.end(), [&](double p) { return p <= u; })) / reps;
    EXPECT_LE(frac, u + 3.0 * std::sqrt(u * (1 - u) / reps)) << u;
  }
}
