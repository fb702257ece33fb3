#include <gtest/gtest.h>

#include <cmath>

#include "adsurv/cond_error.hpp"
#include "adsurv/sim_engine.hpp"
#include "oracles.hpp"

using namespace adsurv;

TEST(ConditionalError, NoFirstStageInformation) {
  EXPECT_EQ(conditional_error(0.3, 0, 248, 0.025), 0.025);
}

TEST(ConditionalError, ClosedForm) {
  EXPECT_NEAR(conditional_error(0.5, 124, 248, 0.025), 0.00279, 1e-5);
  EXPECT_NEAR(conditional_error(0.108, 151, 248, 0.025), 0.0558, 2e-4);
  EXPECT_THROW(conditional_error(0.1, 248, 248, 0.025), AllInformationUsed);
  EXPECT_THROW(conditional_error(0.1, 249, 248, 0.025), ValidationError);
}

TEST(ConditionalError, MatchesJointNullMonteCarlo) {
  // P(S12 standardised > z_alpha | S1 = s1) estimated from the increment law.
  const std::int64_t d1 = 151, d12 = 248;
  const double s1 = 7.6;
  const double z_alpha = z_from_p(0.025);
  const JointNullModel model(d1, d12);
  RngStream rng(31);
  const int n = 400000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double inc = model.sample(rng).second;
    hits += 2.0 * (s1 + inc) / std::sqrt(static_cast<double>(d12)) > z_alpha;
  }
  const auto est = oracle::binomial(hits, n);
  const double ce = conditional_error_from_score(s1, d1, d12, 0.025);
  EXPECT_NEAR(ce, est.p, 3.0 * est.se);
}

TEST(ConditionalError, IncreasingInFirstStageEvidence) {
  double prev = 0.0;
  for (double p1 = 0.99; p1 > 0.001; p1 *= 0.8) {
    const double ce = conditional_error(p1, 100, 248, 0.025);
    EXPECT_GT(ce, prev);
    prev = ce;
  }
}

TEST(Cutoffs, CStar) {
  EXPECT_EQ(cutoff_c_star(0.5), 0.0);
  EXPECT_NEAR(cutoff_c_star(0.025), 1.95996, 1e-5);
  EXPECT_NEAR(cutoff_c_star(0.0558), 1.591, 1e-3);
  EXPECT_THROW(cutoff_c_star(0.0), DomainError);
}

TEST(Cutoffs, BStar) {
  EXPECT_NEAR(cutoff_b_star(1.591, 16.0, 199, 350), 2.76, 0.01);
  EXPECT_EQ(cutoff_b_star(0.0, 0.0, 10, 40), 0.0);
  EXPECT_THROW(cutoff_b_star(1.0, 0.0, 10, 10), DegenerateIncrement);
}

TEST(Psi, WorkedExampleAndBoundaries) {
  EXPECT_FALSE(psi_decision(25.0, 350, 2.76));
  EXPECT_TRUE(psi_decision(-100.0, 350, -1e9));
  const double b = 2.0 * 25.0 / std::sqrt(350.0);
  EXPECT_TRUE(psi_decision(25.0, 350, b));
}

TEST(Psi, BStarAndCStarFormsAgree) {
  RngStream rng(17);
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t d1 = 1 + static_cast<std::int64_t>(rng.below(200));
    const std::int64_t d12 = d1 + 1 + static_cast<std::int64_t>(rng.below(200));
    const double s1 = 3.0 * rng.normal();
    const double s12 = s1 + 4.0 * rng.normal();
    const double ce = 0.001 + 0.998 * rng.uniform();
    const double c = cutoff_c_star(ce);
    const double b = cutoff_b_star(c, s1, d1, d12);
    const double z_inc = 2.0 * (s12 - s1) / std::sqrt(static_cast<double>(d12 - d1));
    if (std::abs(z_inc - c) < 1e-9) continue;
    EXPECT_EQ(psi_decision(s12, d12, b), z_inc >= c);
  }
}

TEST(Psi, RejectsExactlyWhenP2BelowConditionalError) {
  RngStream rng(23);
  for (int i = 0; i < 5000; ++i) {
    TwoStageSnapshots s;
    s.d12 = 248;
    s.d1_t12 = 60 + static_cast<std::int64_t>(rng.below(150));
    s.s1_t12 = std::sqrt(s.d1_t12 / 4.0) * rng.normal();
    s.d1_star = s.d1_t12 + static_cast<std::int64_t>(rng.below(40));
    s.s1_star = s.s1_t12 + std::sqrt((s.d1_star - s.d1_t12) / 4.0) * rng.normal();
    s.d12_star = 300 + static_cast<std::int64_t>(rng.below(100));
    s.s12_star = s.s1_star + std::sqrt((s.d12_star - s.d1_star) / 4.0) * rng.normal();
    const auto r = equivalence_check(s, 0.025);
    const double p2 = p2_increment(s.s12_star, s.s1_star, s.d12_star, s.d1_star);
    if (std::abs(p2 - r.record.ce) < 1e-12) continue;
    EXPECT_EQ(r.psi, p2 <= r.record.ce);
    EXPECT_TRUE(r.agree);
  }
}

TEST(Psi, ExpectationEqualsConditionalError) {
  const std::int64_t d1 = 120, d12 = 248, d12_star = 330, d1_star = 150;
  const double s1 = 4.0;
  const double ce = conditional_error_from_score(s1, d1, d12, 0.025);
  RngStream rng(29);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double s1_star = s1 + std::sqrt((d1_star - d1) / 4.0) * rng.normal();
    const double s12_star = s1_star + std::sqrt((d12_star - d1_star) / 4.0) * rng.normal();
    const auto rec = conditional_error_record(s1, d1, d12, 0.025, s1_star, d1_star, d12_star);
    hits += psi_decision(s12_star, d12_star, rec.b_star);
  }
  const auto est = oracle::binomial(hits, n);
  EXPECT_NEAR(est.p, ce, 3.0 * est.se);
}

TEST(PsiExtended, Boundaries) {
  const std::int64_t d = 100;
  const double s = 3.7;
  const double b = 2.0 * s / std::sqrt(static_cast<double>(d));
  EXPECT_TRUE(psi_extended(s, d, b));
  EXPECT_FALSE(psi_extended(s, d, std::nextafter(b, 10.0)));
  EXPECT_TRUE(psi_extended(0.0, 10, extended_cutoff(0.5)));
  EXPECT_THROW(psi_extended(1.0, 0, 1.0), ZeroEvents);
}

TEST(PsiExtended, NullRejectionEqualsConditionalError) {
  const double ce = 0.07;
  const double b = extended_cutoff(ce);
  RngStream rng(41);
  const std::int64_t d = 80;
  const int n = 200000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += psi_extended(std::sqrt(d / 4.0) * rng.normal(), d, b);
  const auto est = oracle::binomial(hits, n);
  EXPECT_NEAR(est.p, ce, 3.0 * est.se);
}

TEST(Equivalence, WorkedExample) {
  const TwoStageSnapshots s{7.6, 151, 248, 16.0, 199, 25.0, 350};
  const auto r = equivalence_check(s, 0.025);
  EXPECT_FALSE(r.combination.reject);
  EXPECT_FALSE(r.psi);
  EXPECT_TRUE(r.agree);
  EXPECT_NEAR(r.record.b_star, 2.76, 0.01);
  EXPECT_NEAR(r.record.ce, 0.0558, 2e-4);
}

TEST(Equivalence, JointNullScoresUncorrelated) {
  const JointNullModel m(100, 250);
  RngStream rng(3);
  const int n = 200000;
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = m.sample(rng);
    sa += a, sb += b, sab += a * b, saa += a * a, sbb += b * b;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n) * (sbb / n));
  EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(n));
  EXPECT_NEAR(saa / n, 25.0, 0.5);
  EXPECT_NEAR(sbb / n, 37.5, 0.75);
}

namespace {

SimSummary agreement_run(double lambda_e, std::uint64_t seed) {
  ScenarioConfig sc;
  sc.control = Exponential{0.05};
  sc.experimental = Exponential{lambda_e};
  sc.accrual_rate = 48;
  sc.accrual_months = 12;
  sc.followup_months = 8;
  sc.interim = {Interim::Kind::AtMonth, 6.0};
  sc.design = {0.025, 0.2, 0.356675, 248, IrleRule{}};
  return operating_characteristics(sc, IncreaseEvents{350}, 1000, seed).summary;
}

}  // namespace

TEST(Equivalence, SimulatedNullTrialsAgree) {
  const auto s = agreement_run(0.05, 101);
  EXPECT_EQ(s.psi_evaluated, 1000);
  EXPECT_EQ(s.psi_agreements, 1000);
}

TEST(Equivalence, SimulatedAlternativeTrialsAgree) {
  const auto s = agreement_run(0.035, 102);
  EXPECT_EQ(s.psi_evaluated, 1000);
  EXPECT_EQ(s.psi_agreements, 1000);
}
