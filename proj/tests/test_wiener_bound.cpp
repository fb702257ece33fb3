#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "adsurv/wiener_bound.hpp"
#include "oracles.hpp"

using namespace adsurv;

TEST(LinearNoncross, ClosedFormValues) {
  EXPECT_NEAR(linear_noncross({0.0, 1.0, 1.0}), norm_cdf(1.0) - norm_cdf(-1.0), 1e-15);
  EXPECT_NEAR(linear_noncross({0.0, 1.0, 1.0}), 0.6827, 1e-4);
  EXPECT_NEAR(linear_noncross({1.0, 1.0, 1.0}), norm_cdf(2.0) - std::exp(-2.0) * 0.5, 1e-15);
  EXPECT_NEAR(linear_noncross({1.0, 1.0, 1.0}), 0.90958, 1e-5);
  EXPECT_NEAR(linear_noncross({0.0, 1e6, 1.0}), 1.0, 1e-12);
}

TEST(LinearNoncross, InvalidBoundary) {
  EXPECT_THROW(linear_noncross({0.0, 0.0, 1.0}), InvalidBoundary);
  EXPECT_THROW(linear_noncross({0.0, 1.0, 0.0}), InvalidBoundary);
}

TEST(LinearNoncross, DriftIsSlopeShift) {
  for (double mu : {-1.0, 0.3, 2.0}) {
    EXPECT_NEAR(linear_noncross({0.5, 1.2, 2.0}, mu), linear_noncross({0.5 - mu, 1.2, 2.0}), 1e-15);
  }
}

TEST(LinearNoncross, MatchesMonteCarlo) {
  const auto mc = oracle::linear_noncross_mc(0.4, 0.9, 1.5, -0.2, 200000, 5);
  EXPECT_NEAR(linear_noncross({0.4, 0.9, 1.5}, -0.2), mc.p, 3.0 * mc.se);
}

TEST(PiecewiseNoncross, OneSegmentReducesToLinear) {
  const std::vector<double> g{0.0, 1.3};
  const std::vector<double> b{0.8, 1.7};
  EXPECT_NEAR(piecewise_noncross(g, b), linear_noncross({0.9 / 1.3, 0.8, 1.3}), 1e-15);
  EXPECT_NEAR(piecewise_noncross(g, b, 0.4), linear_noncross({0.9 / 1.3, 0.8, 1.3}, 0.4), 1e-15);
}

TEST(PiecewiseNoncross, CollinearSegmentsMatchLinear) {
  const double a = 0.7, b0 = 1.1;
  std::vector<double> g{0.0, 0.35, 0.8, 1.0};
  std::vector<double> b;
  for (double u : g) b.push_back(a * u + b0);
  EXPECT_NEAR(piecewise_noncross(g, b), linear_noncross({a, b0, 1.0}), 1e-6);
  EXPECT_NEAR(piecewise_noncross(g, b, -0.5), linear_noncross({a, b0, 1.0}, -0.5), 1e-6);
}

TEST(PiecewiseNoncross, MatchesMonteCarloOnBentBoundary) {
  std::vector<double> g{0.2, 0.5, 0.7, 1.0};
  std::vector<double> b{1.0, 0.8, 1.5, 1.2};
  const auto f = [&](double u) {
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      if (u <= g[i + 1]) return b[i] + (b[i + 1] - b[i]) * (u - g[i]) / (g[i + 1] - g[i]);
    }
    return b.back();
  };
  const auto mc = oracle::piecewise_noncross_mc(g, f, 0.3, 300000, 9);
  EXPECT_NEAR(piecewise_noncross(g, b, 0.3), mc.p, 3.0 * mc.se);
}

TEST(PiecewiseNoncross, BoundaryBelowSupportGivesZero) {
  std::vector<double> g{0.5, 1.0};
  std::vector<double> b{-20.0, 1.0};
  EXPECT_EQ(piecewise_noncross(g, b), 0.0);
}

TEST(PiecewiseNoncross, MonotoneInUniformShift) {
  const auto g = geometric_knots(0.3, 8);
  double prev = 0.0;
  for (double shift = -1.0; shift <= 3.0; shift += 0.25) {
    std::vector<double> b;
    for (double u : g) b.push_back(shift + std::sqrt(u));
    const double p = piecewise_noncross(g, b);
    EXPECT_GE(p, prev - 1e-12);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    prev = p;
  }
}

TEST(PiecewiseNoncross, RejectsBadKnots) {
  std::vector<double> g{0.0, 0.5, 0.5};
  std::vector<double> b{1.0, 1.0, 1.0};
  EXPECT_THROW(piecewise_noncross(g, b), ValidationError);
  std::vector<double> g2{0.0, 1.0};
  std::vector<double> b2{0.0, 1.0};
  EXPECT_THROW(piecewise_noncross(g2, b2), InvalidBoundary);
}

TEST(SqrtCrossing, UnitHorizonIsNormalTail) {
  const BoundaryProblem bp{0.6, 1.0, 0.025, 0.0, {}};
  const double p2 = 0.3;
  const double h = (1.96 - 0.8 * z_from_p(p2)) / 0.6;
  EXPECT_NEAR(sqrt_crossing_given_p2(bp, 1.96, p2), norm_sf(h), 1e-15);
  const BoundaryProblem drifted{0.6, 1.0, 0.025, 0.7, {}};
  EXPECT_NEAR(sqrt_crossing_given_p2(drifted, 1.96, p2), norm_sf(h - 0.7), 1e-15);
}

TEST(SqrtCrossing, VanishingFirstStageWeightIsIndicator) {
  const BoundaryProblem bp{0.0, 0.4, 0.025, 0.0, {}};
  EXPECT_EQ(sqrt_crossing_given_p2(bp, 1.96, 0.01), 1.0);
  EXPECT_EQ(sqrt_crossing_given_p2(bp, 1.96, 0.2), 0.0);
}

TEST(SqrtCrossing, MatchesMonteCarloAtLongWindow) {
  const BoundaryProblem bp{0.9, 0.1, 0.025, 0.0, geometric_knots(0.1, 16)};
  const double got = sqrt_crossing_given_p2(bp, 1.96, 0.5);
  const auto mc = oracle::sqrt_crossing_mc(1.96 / 0.9, 0.1, 0.0, 400000, 77);
  EXPECT_NEAR(got, mc.p, 3.0 * mc.se);
}

TEST(SqrtCrossing, KnotRefinementConverges) {
  // Chords under-shoot the concave boundary, so more knots means fewer crossings.
  double prev = 1.0;
  for (int m : {4, 8, 16, 32, 64}) {
    const double g = sqrt_crossing(2.18, 0.1, geometric_knots(0.1, m));
    EXPECT_LE(g, prev + 1e-9) << m;
    prev = g;
  }
  const double g16 = sqrt_crossing(2.18, 0.1, geometric_knots(0.1, 16));
  const double g32 = sqrt_crossing(2.18, 0.1, geometric_knots(0.1, 32));
  EXPECT_LT(std::abs(g16 - g32), 5e-4);
}

TEST(CrossingCurve, InterpolatesDirectEvaluation) {
  const auto knots = geometric_knots(0.4, 16);
  const CrossingCurve curve(0.4, knots);
  for (double h = -2.0; h <= 5.0; h += 0.173) {
    EXPECT_NEAR(curve(h), sqrt_crossing(h, 0.4, knots), 2e-5) << h;
  }
}

TEST(WorstCaseAlpha, WorkedExamples) {
  EXPECT_NEAR(worst_case_alpha(std::sqrt(170.0 / 248.0), 170.0 / 190.0, 0.025), 0.040, 0.002);
  EXPECT_NEAR(worst_case_alpha(std::sqrt(147.0 / 248.0), 147.0 / 288.0, 0.025), 0.066, 0.002);
  const double corner = worst_case_alpha(0.9, 0.1, 0.025);
  EXPECT_GE(corner, 0.14);
  EXPECT_LE(corner, 0.16);
}

TEST(WorstCaseAlpha, NoWindowGivesAlpha) {
  for (double w1 : {0.2, 0.5, 0.9}) EXPECT_NEAR(worst_case_alpha(w1, 1.0, 0.025), 0.025, 1e-9);
}

TEST(WorstCaseAlpha, IncreasesAsWindowLengthens) {
  double prev = 0.025;
  for (double u1 : {0.95, 0.8, 0.6, 0.4, 0.2, 0.1}) {
    const double a = worst_case_alpha(0.7, u1, 0.025);
    EXPECT_GT(a, prev) << u1;
    prev = a;
  }
}

TEST(CorrectedKStar, TableCells) {
  EXPECT_NEAR(corrected_kstar(std::sqrt(0.5), 0.5, 0.025), 2.38, 0.02);
  EXPECT_NEAR(corrected_kstar(std::sqrt(0.9), 0.1, 0.025), 2.83, 0.02);
  EXPECT_NEAR(corrected_kstar(0.6, 1.0, 0.025), 1.95996, 1e-5);
}

TEST(CorrectedKStar, RestoresAlpha) {
  for (auto [w1, u1] : {std::pair{0.5, 0.5}, std::pair{0.9, 0.2}, std::pair{0.3, 0.8}}) {
    const double k = corrected_kstar(w1, u1, 0.025);
    BoundaryProblem bp{w1, u1, 0.025, 0.0, geometric_knots(u1, kDefaultKnots)};
    EXPECT_NEAR(crossing_probability(bp, k), 0.025, 1e-4);
  }
}

TEST(CorrectedKStar, TableMonotonicity) {
  const std::vector<double> w1{0.3, 0.5, 0.7, 0.9};
  const std::vector<double> u1{0.2, 0.5, 0.8};
  const auto t = kstar_table(w1, u1, 0.025);
  for (std::size_t i = 0; i < w1.size(); ++i) {
    for (std::size_t j = 0; j < u1.size(); ++j) {
      if (i > 0) {
        EXPECT_GE(t[i][j], t[i - 1][j]);
      }
      if (j > 0) {
        EXPECT_LE(t[i][j], t[i][j - 1]);
      }
    }
  }
}

namespace {

PowerInputs scenario_a() {
  PowerInputs pi;
  pi.w = Weights::from_first(std::sqrt(170.0 / 248.0));
  pi.d1_t1 = 170;
  pi.d1_tmax = 190;
  pi.theta_R = 0.36;
  pi.alpha = 0.025;
  pi.k_star = corrected_kstar(pi.w.w1(), pi.u1(), pi.alpha);
  return pi;
}

}  // namespace

TEST(Power, NullDriftReduction) {
  PowerInputs pi = scenario_a();
  pi.theta_R = 0.0;
  for (double p2 : {0.05, 0.3, 0.8}) {
    const double expect = norm_sf((z_from_p(0.025) - pi.w.w2() * z_from_p(p2)) / pi.w.w1());
    EXPECT_NEAR(power_A(pi, p2), expect, 1e-15);
  }
}

TEST(Power, Orderings) {
  const PowerInputs pi = scenario_a();
  ASSERT_GT(pi.k_star, z_from_p(0.025));
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  for (const auto& pt : power_curves(pi, grid)) {
    EXPECT_LE(pt.b, pt.a) << pt.p2;
    EXPECT_GE(pt.d, pt.b - 1e-12) << pt.p2;
    EXPECT_GE(pt.c, pt.b - 1e-12) << pt.p2;
  }
}

TEST(Power, DMatchesDirectEvaluation) {
  const PowerInputs pi = scenario_a();
  const std::vector<double> grid{0.1, 0.5};
  const auto pts = power_curves(pi, grid);
  EXPECT_NEAR(pts[0].d, power_D(pi, 0.1), 1e-12);
  EXPECT_NEAR(pts[1].d, power_D(pi, 0.5), 1e-12);
}

TEST(Power, MatchesDriftedPathMonteCarlo) {
  const PowerInputs pi = scenario_a();
  for (double p2 : {0.1, 0.5}) {
    const double z2 = z_from_p(p2);
    const auto a = oracle::fixed_time_power_mc(pi.w.w1(), z_from_p(0.025), z2, 0.36, 170, 200000, 1);
    EXPECT_NEAR(power_A(pi, p2), a.p, 3.0 * a.se);
    const auto c = oracle::fixed_time_power_mc(pi.w.w1(), pi.k_star, z2, 0.36, 190, 200000, 2);
    EXPECT_NEAR(power_C(pi, p2), c.p, 3.0 * c.se);
    const double h = (pi.k_star - pi.w.w2() * z2) / pi.w.w1();
    const auto d = oracle::sqrt_crossing_mc(h, pi.u1(), pi.drift(), 200000, 3);
    EXPECT_NEAR(power_D(pi, p2), d.p, 3.0 * d.se);
  }
}

TEST(Power, InputValidation) {
  PowerInputs pi = scenario_a();
  pi.d1_tmax = 100;
  EXPECT_THROW(power_A(pi, 0.5), ValidationError);
}
