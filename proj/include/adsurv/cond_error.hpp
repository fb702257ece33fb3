#pragma once

// Conditional-error pathway for event-driven designs that extend follow-up
// from d12 to d12* events: the null conditional error of the planned test
// given the first-stage score, the second-stage cutoffs c* and b*, and the
// psi decision, which coincides with the inverse-normal combination test
// under data-dependent weights.

#include <cmath>
#include <cstdint>
#include <utility>

#include "adsurv/combo_test.hpp"
#include "adsurv/errors.hpp"
#include "adsurv/numerics.hpp"

namespace adsurv {

/// Asymptotic null law of (S1(t), S12(t) - S1(t)): independent centred
/// normals with variances D1/4 and (D12 - D1)/4 under equal allocation.
struct JointNullModel {
  std::int64_t d1_t = 0;
  std::int64_t d12_t = 0;

  JointNullModel(std::int64_t d1, std::int64_t d12) : d1_t(d1), d12_t(d12) {
    if (d1 < 0 || d1 > d12) throw ValidationError("JointNullModel needs 0 <= D1 <= D12");
  }

  double first_variance() const { return d1_t / 4.0; }
  double increment_variance() const { return (d12_t - d1_t) / 4.0; }

  /// Draw (S1, S12 - S1).
  std::pair<double, double> sample(RngStream& rng) const {
    const double a = std::sqrt(first_variance()) * rng.normal();
    const double b = std::sqrt(increment_variance()) * rng.normal();
    return {a, b};
  }
};

struct ConditionalErrorRecord {
  Probability ce;
  double c_star = 0.0;
  double b_star = 0.0;
};

/// Null conditional rejection probability of the planned d12-event test
/// given the first-stage evidence Phi^-1(1 - p1) at T12.
inline Probability conditional_error(Probability p1, std::int64_t d1_t12, std::int64_t d12,
                                     Probability alpha) {
  if (d1_t12 < 0 || d1_t12 > d12) {
    throw ValidationError("conditional_error requires 0 <= D1(T12) <= d12");
  }
  if (d1_t12 == 0) return alpha;
  if (d1_t12 == d12) {
    throw AllInformationUsed("all d12 events come from first-stage patients");
  }
  const double rest = static_cast<double>(d12 - d1_t12);
  const double arg = z_from_p(alpha) * std::sqrt(d12 / rest) -
                     z_from_p(p1) * std::sqrt(d1_t12 / rest);
  return norm_sf(arg);
}

/// Same quantity from the raw first-stage score S1(T12).
inline Probability conditional_error_from_score(double s1_t12, std::int64_t d1_t12,
                                                std::int64_t d12, Probability alpha) {
  if (d1_t12 == 0) return conditional_error(0.5, 0, d12, alpha);
  return conditional_error(p1_first_stage(s1_t12, d1_t12), d1_t12, d12, alpha);
}

inline double cutoff_c_star(Probability ce) {
  if (!(ce > 0.0 && ce < 1.0)) throw DomainError("cutoff_c_star requires 0 < ce < 1");
  return -norm_quantile(ce);
}

/// Cutoff on 2 * S12(T12*) / sqrt(d12*) equivalent to testing the
/// standardised increment against c*.
inline double cutoff_b_star(double c_star, double s1_star, std::int64_t d1_star,
                            std::int64_t d12_star) {
  if (d12_star <= d1_star) throw DegenerateIncrement("cutoff_b_star requires d12* > D1(T12*)");
  return (2.0 * s1_star + c_star * std::sqrt(static_cast<double>(d12_star - d1_star))) /
         std::sqrt(static_cast<double>(d12_star));
}

/// Non-strict inequality (>=), unlike the combination decision.
inline bool psi_decision(double s12_star, std::int64_t d12_star, double b_star) {
  if (d12_star < 1) throw ZeroEvents("psi_decision needs d12* >= 1");
  return 2.0 * s12_star / std::sqrt(static_cast<double>(d12_star)) >= b_star;
}

/// Cutoff for an additional, independent second-stage cohort: its
/// standardised logrank is N(0,1) under H0 regardless of first-stage data,
/// so the cutoff matching conditional error ce is Phi^-1(1 - ce).
inline double extended_cutoff(Probability ce) { return cutoff_c_star(ce); }

/// Decision on the post-interim cohort's own logrank statistic.
inline bool psi_extended(double s2_plus, std::int64_t d2_plus, double b_star) {
  if (d2_plus < 1) throw ZeroEvents("psi_extended needs at least one event");
  return 2.0 * s2_plus / std::sqrt(static_cast<double>(d2_plus)) >= b_star;
}

inline ConditionalErrorRecord conditional_error_record(double s1_t12, std::int64_t d1_t12,
                                                       std::int64_t d12, Probability alpha,
                                                       double s1_star, std::int64_t d1_star,
                                                       std::int64_t d12_star) {
  ConditionalErrorRecord rec;
  rec.ce = conditional_error_from_score(s1_t12, d1_t12, d12, alpha);
  rec.c_star = cutoff_c_star(rec.ce);
  rec.b_star = cutoff_b_star(rec.c_star, s1_star, d1_star, d12_star);
  return rec;
}

/// Snapshot values at T12 (planned end) and T12* (extended end).
struct TwoStageSnapshots {
  double s1_t12 = 0.0;
  std::int64_t d1_t12 = 0;
  std::int64_t d12 = 0;
  double s1_star = 0.0;
  std::int64_t d1_star = 0;
  double s12_star = 0.0;
  std::int64_t d12_star = 0;
};

struct EquivalenceResult {
  CombinedResult combination;
  ConditionalErrorRecord record;
  bool psi = false;
  bool agree = false;
};

/// Evaluates the psi path and the combination path (Irle weights, increment
/// p-value) and reports whether they agree. Disagreement is tolerated only
/// when Z lies within `boundary_band` of the cutoff.
inline EquivalenceResult equivalence_check(const TwoStageSnapshots& s, Probability alpha,
                                           double boundary_band = 1e-12) {
  EquivalenceResult r;
  const Weights w = irle_weights(s.d1_t12, s.d12);
  const double z1 = s.d1_t12 > 0 ? standardized_score(s.s1_t12, s.d1_t12) : 0.0;
  if (s.d12_star <= s.d1_star) {
    throw DegenerateIncrement("equivalence_check requires d12* > D1(T12*)");
  }
  const double z2 = 2.0 * (s.s12_star - s.s1_star) /
                    std::sqrt(static_cast<double>(s.d12_star - s.d1_star));
  r.combination = decide(combine_standardized(w, z1, z2), z_from_p(alpha));
  r.record = conditional_error_record(s.s1_t12, s.d1_t12, s.d12, alpha, s.s1_star, s.d1_star,
                                      s.d12_star);
  r.psi = psi_decision(s.s12_star, s.d12_star, r.record.b_star);
  r.agree = (r.psi == r.combination.reject) ||
            std::abs(r.combination.z - r.combination.cutoff) <= boundary_band;
  return r;
}

}  // namespace adsurv
