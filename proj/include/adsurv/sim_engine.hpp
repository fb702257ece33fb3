#pragma once

// Scenario-driven simulation of two-stage adaptive survival trials.
//
// Accrual uses deterministic monthly quotas with uniform placement inside
// each month; arms are allocated in permuted blocks of two in entry order.
// Scores follow the surv_core convention (positive favours Experimental).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "adsurv/combo_test.hpp"
#include "adsurv/cond_error.hpp"
#include "adsurv/errors.hpp"
#include "adsurv/numerics.hpp"
#include "adsurv/surv_core.hpp"
#include "adsurv/wiener_bound.hpp"

namespace adsurv {

// ---------------------------------------------------------------------------
// Hazard models

struct Exponential {
  double lambda = 0.05;  // per month
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

/// Hazard 1 / (1/base - slope * tau) for tau < limit, frozen at its value at
/// `limit` afterwards.
struct DivergingControl {
  double base = 0.04;
  double slope = 0.6;
  double limit = 30.0;
  friend bool operator==(const DivergingControl&, const DivergingControl&) = default;
};

using HazardModel = std::variant<Exponential, DivergingControl>;

inline void validate(const HazardModel& model) {
  if (const auto* e = std::get_if<Exponential>(&model)) {
    if (!(e->lambda > 0.0) || !std::isfinite(e->lambda)) {
      throw ValidationError("exponential lambda must be > 0");
    }
    return;
  }
  const auto& d = std::get<DivergingControl>(model);
  if (!(d.base > 0.0)) throw ValidationError("diverging base hazard must be > 0");
  if (!(d.slope >= 0.0)) throw ValidationError("diverging slope must be >= 0");
  if (!(d.limit > 0.0)) throw ValidationError("diverging limit must be > 0");
  if (!(1.0 / d.base - d.slope * d.limit > 0.0)) {
    throw ValidationError("diverging hazard must stay positive up to its limit");
  }
}

inline double hazard(const HazardModel& model, double tau) {
  if (const auto* e = std::get_if<Exponential>(&model)) return e->lambda;
  const auto& d = std::get<DivergingControl>(model);
  const double t = std::min(tau, d.limit);
  return 1.0 / (1.0 / d.base - d.slope * t);
}

inline double cumulative_hazard(const HazardModel& model, double tau) {
  if (tau <= 0.0) return 0.0;
  if (const auto* e = std::get_if<Exponential>(&model)) return e->lambda * tau;
  const auto& d = std::get<DivergingControl>(model);
  const double inv_base = 1.0 / d.base;
  auto ramp = [&](double t) {
    if (d.slope == 0.0) return d.base * t;
    return std::log(inv_base / (inv_base - d.slope * t)) / d.slope;
  };
  if (tau <= d.limit) return ramp(tau);
  return ramp(d.limit) + (tau - d.limit) * hazard(model, d.limit);
}

inline double survival_probability(const HazardModel& model, double tau) {
  return std::exp(-cumulative_hazard(model, tau));
}

inline double inverse_cumulative_hazard(const HazardModel& model, double big_h) {
  if (const auto* e = std::get_if<Exponential>(&model)) return big_h / e->lambda;
  const auto& d = std::get<DivergingControl>(model);
  const double h_limit = cumulative_hazard(model, d.limit);
  if (big_h <= h_limit) {
    if (d.slope == 0.0) return big_h / d.base;
    return (1.0 / d.base) / d.slope * (-std::expm1(-d.slope * big_h));
  }
  return d.limit + (big_h - h_limit) / hazard(model, d.limit);
}

/// Inverse-cumulative-hazard draw of a survival time (months since entry).
inline double sample_survival(const HazardModel& model, RngStream& rng) {
  double t = inverse_cumulative_hazard(model, rng.exponential());
  return std::max(t, std::numeric_limits<double>::min());
}

// ---------------------------------------------------------------------------
// Design and scenario

struct JenkinsRule {
  std::int64_t d1 = 0;  // envisioned first-stage events (fixes T1)
  std::int64_t d2 = 0;  // envisioned second-stage events
  friend bool operator==(const JenkinsRule&, const JenkinsRule&) = default;
};
struct IrleRule {
  friend bool operator==(const IrleRule&, const IrleRule&) = default;
};
using WeightRule = std::variant<JenkinsRule, IrleRule>;

struct DesignSpec {
  Probability alpha = 0.025;
  Probability beta = 0.2;
  double theta_R = 0.0;
  std::int64_t d12 = 0;
  WeightRule weight_rule = IrleRule{};

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must lie in (0,1)");
    if (!(theta_R > 0.0)) throw ValidationError("theta_R must be > 0");
    if (d12 < 2) throw ValidationError("d12 must be >= 2");
    if (const auto* j = std::get_if<JenkinsRule>(&weight_rule)) {
      if (j->d1 < 1 || j->d2 < 1) throw ValidationError("jenkins d1 and d2 must be >= 1");
    }
  }
};

struct NoChange {
  friend bool operator==(const NoChange&, const NoChange&) = default;
};
struct IncreaseEvents {
  std::int64_t d12_star = 0;
  friend bool operator==(const IncreaseEvents&, const IncreaseEvents&) = default;
};
/// Hindsight adversary: ends first-stage follow-up where the standardised
/// first-stage logrank peaks over [T1, Tmax]. An upper-bound construction,
/// not a realisable trial.
struct AdversarialMaxStop {
  friend bool operator==(const AdversarialMaxStop&, const AdversarialMaxStop&) = default;
};
using AdaptiveRule = std::variant<NoChange, IncreaseEvents, AdversarialMaxStop>;

struct Interim {
  enum class Kind { AtEvents, AtMonth };
  Kind kind = Kind::AtMonth;
  double value = 0.0;
  friend bool operator==(const Interim&, const Interim&) = default;
};

struct ScenarioConfig {
  HazardModel control = Exponential{0.05};
  HazardModel experimental = Exponential{0.05};
  double accrual_rate = 0.0;     // patients per month
  double accrual_months = 0.0;
  double followup_months = 0.0;  // after accrual ends
  Interim interim;
  DesignSpec design;
  AdaptiveRule rule = NoChange{};

  double t_max() const { return accrual_months + followup_months; }
  std::int64_t n_subjects() const { return std::llround(accrual_rate * accrual_months); }

  void validate() const {
    adsurv::validate(control);
    adsurv::validate(experimental);
    if (!(accrual_rate > 0.0)) throw ValidationError("accrual rate must be > 0");
    if (!(accrual_months > 0.0)) throw ValidationError("accrual months must be > 0");
    if (!(followup_months > 0.0)) throw ValidationError("followup months must be > 0");
    if (!(interim.value > 0.0)) throw ValidationError("interim must be > 0");
    if (interim.kind == Interim::Kind::AtMonth && !(interim.value < t_max())) {
      throw ValidationError("interim must come before T_max");
    }
    if (interim.kind == Interim::Kind::AtEvents &&
        interim.value > static_cast<double>(n_subjects())) {
      throw ValidationError("interim event count exceeds the number of subjects");
    }
    design.validate();
    if (const auto* inc = std::get_if<IncreaseEvents>(&rule)) {
      if (inc->d12_star <= design.d12) throw ValidationError("d12_star must exceed d12");
    }
  }
};

struct RequiredEvents {
  double exact = 0.0;
  std::int64_t rounded = 0;  // next even integer >= exact
};

/// Events needed by the fixed logrank test: 4 [(z_{1-a} + z_{1-b}) / theta]^2.
inline RequiredEvents required_events(Probability alpha, Probability beta, double theta_R) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0)) {
    throw ValidationError("alpha and beta must lie in (0,1)");
  }
  if (!(theta_R > 0.0)) throw ValidationError("theta_R must be > 0");
  const double r = (z_from_p(alpha) + z_from_p(beta)) / theta_R;
  RequiredEvents out;
  out.exact = 4.0 * r * r;
  auto up = static_cast<std::int64_t>(std::ceil(out.exact - 1e-9));
  if (up % 2 != 0) ++up;
  out.rounded = up;
  return out;
}

/// Expected number of events by calendar time t under uniform accrual, half
/// of the patients on each arm.
inline double expected_events(const ScenarioConfig& sc, double t) {
  if (t <= 0.0) return 0.0;
  const double accrued_until = std::min(t, sc.accrual_months);
  const double n = static_cast<double>(sc.n_subjects());
  const double density = n / sc.accrual_months;
  auto arm_events = [&](const HazardModel& model) {
    auto f = [&](double e) { return 1.0 - survival_probability(model, t - e); };
    // Split at the hazard's kink so each piece is smooth.
    std::vector<double> cuts{0.0, accrued_until};
    if (const auto* d = std::get_if<DivergingControl>(&model)) {
      const double kink = t - d->limit;
      if (kink > 0.0 && kink < accrued_until) cuts.insert(cuts.begin() + 1, kink);
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate(f, cuts[i], cuts[i + 1], 64);
    return 0.5 * density * total;
  };
  return arm_events(sc.control) + arm_events(sc.experimental);
}

struct SimulatedTrial {
  std::vector<SubjectRecord> subjects;  // sorted by entry
  double t_int = 0.0;
};

/// Entries by monthly quota, permuted blocks of two, survival by inversion,
/// then stage labels from the interim time.
inline SimulatedTrial simulate_trial(const ScenarioConfig& sc, RngStream& rng) {
  SimulatedTrial trial;
  const std::int64_t n = sc.n_subjects();
  trial.subjects.reserve(static_cast<std::size_t>(n));
  const auto months = static_cast<std::int64_t>(std::ceil(sc.accrual_months - 1e-12));
  std::int64_t placed = 0;
  for (std::int64_t j = 0; j < months && placed < n; ++j) {
    const double end = std::min(static_cast<double>(j + 1), sc.accrual_months);
    const std::int64_t cum = std::min<std::int64_t>(n, std::llround(sc.accrual_rate * end));
    const double width = end - static_cast<double>(j);
    for (; placed < cum; ++placed) {
      trial.subjects.push_back({static_cast<double>(j) + width * rng.uniform(), 1.0,
                                Arm::Control, Stage::First});
    }
  }
  std::sort(trial.subjects.begin(), trial.subjects.end(),
            [](const SubjectRecord& a, const SubjectRecord& b) { return a.entry < b.entry; });
  for (std::size_t i = 0; i < trial.subjects.size(); i += 2) {
    const bool control_first = rng.uniform() < 0.5;
    trial.subjects[i].arm = control_first ? Arm::Control : Arm::Experimental;
    if (i + 1 < trial.subjects.size()) {
      trial.subjects[i + 1].arm = control_first ? Arm::Experimental : Arm::Control;
    }
  }
  for (auto& s : trial.subjects) {
    s.surv = sample_survival(s.arm == Arm::Control ? sc.control : sc.experimental, rng);
  }
  if (sc.interim.kind == Interim::Kind::AtMonth) {
    trial.t_int = sc.interim.value;
  } else {
    trial.t_int = calendar_time_of_event_count(
        trial.subjects, static_cast<std::int64_t>(std::llround(sc.interim.value)));
  }
  for (auto& s : trial.subjects) s.stage = s.entry < trial.t_int ? Stage::First : Stage::Second;
  return trial;
}

// ---------------------------------------------------------------------------
// One adaptive trial

/// Everything computed for one simulated trial.
struct TrialRecord {
  double t_int = 0.0;
  double t1 = 0.0;        // end of legitimate first-stage follow-up (T12 for Irle)
  double t_final = 0.0;   // final pooled analysis (T12 or T12*)
  double t_window_end = 0.0;
  double t_star = 0.0;    // first-stage follow-up end used by Z*

  std::int64_t d12_planned = 0;
  std::int64_t d_final = 0;
  std::int64_t d1_t1 = 0;
  std::int64_t d1_final = 0;
  std::int64_t d1_window_end = 0;
  std::int64_t d1_tstar = 0;
  std::int64_t d12_at_t12 = 0;
  double s1_t1 = 0.0;
  double s1_final = 0.0;
  double s12_final = 0.0;
  double s1_tstar = 0.0;

  double w1 = 0.0;
  double w2 = 0.0;
  double u1 = 1.0;
  double p1 = 0.5;
  double p2 = 0.5;
  double z = 0.0;
  double z_star = 0.0;
  double cutoff = 0.0;  // Phi^-1(1 - alpha)

  bool reject_combination = false;
  bool reject_naive = false;

  // Conditional-error path (Irle weights, non-adversarial rules only).
  std::optional<ConditionalErrorRecord> ce_record;
  std::optional<bool> psi;
  std::optional<bool> psi_agrees;

  // Corrected test; filled by apply_corrected_cutoff.
  double k_star = std::numeric_limits<double>::quiet_NaN();
  bool reject_corrected = false;

  /// Events added beyond d12 minus first-stage events accrued after T1.
  double information_deficit = 0.0;
};

using CutoffFunction = std::function<double(double w1, double u1)>;

namespace detail {

inline double standardized_or_zero(const Snapshot& s) {
  return s.d_events > 0 ? standardized_score(s.score, s.d_events) : 0.0;
}

}  // namespace detail

/// Simulates one trial and computes the combination, psi and naive Z*
/// decisions. The corrected decision is left for apply_corrected_cutoff.
inline TrialRecord simulate_adaptive(const ScenarioConfig& sc, const AdaptiveRule& rule,
                                     RngStream& rng) {
  TrialRecord rec;
  const SimulatedTrial trial = simulate_trial(sc, rng);
  const auto& all = trial.subjects;
  const auto first = select_stage(all, Stage::First);
  const auto second = select_stage(all, Stage::Second);
  const DesignSpec& design = sc.design;
  const bool adversarial = std::holds_alternative<AdversarialMaxStop>(rule);
  const bool irle = std::holds_alternative<IrleRule>(design.weight_rule);

  rec.t_int = trial.t_int;
  rec.d12_planned = design.d12;
  rec.cutoff = z_from_p(design.alpha);
  const double t12 = calendar_time_of_event_count(all, design.d12);

  Weights w = Weights::from_first(1.0);
  if (irle) {
    rec.t1 = t12;
    rec.d1_t1 = event_count(first, rec.t1);
    w = irle_weights(rec.d1_t1, design.d12);
  } else {
    const auto& j = std::get<JenkinsRule>(design.weight_rule);
    rec.t1 = calendar_time_of_event_count(first, j.d1);
    w = jenkins_weights(j.d1, j.d2);
  }
  rec.w1 = w.w1();
  rec.w2 = w.w2();
  const Snapshot snap1 = snapshot(first, rec.t1);
  rec.d1_t1 = snap1.d_events;
  rec.s1_t1 = snap1.score;
  const double z1 = detail::standardized_or_zero(snap1);
  rec.p1 = norm_sf(z1);

  rec.d_final = design.d12;
  if (const auto* inc = std::get_if<IncreaseEvents>(&rule)) rec.d_final = inc->d12_star;
  rec.t_final = calendar_time_of_event_count(all, rec.d_final);
  rec.d12_at_t12 = event_count(all, t12);

  const Snapshot final_first = snapshot(first, rec.t_final);
  const Snapshot final_all = snapshot(all, rec.t_final);
  rec.d1_final = final_first.d_events;
  rec.s1_final = final_first.score;
  rec.s12_final = final_all.score;

  double z2 = 0.0;
  if (adversarial) {
    z2 = detail::standardized_or_zero(snapshot(second, sc.t_max()));
  } else if (irle) {
    const std::int64_t d_inc = final_all.d_events - final_first.d_events;
    if (d_inc > 0) {
      z2 = 2.0 * (final_all.score - final_first.score) / std::sqrt(static_cast<double>(d_inc));
    }
  } else {
    z2 = detail::standardized_or_zero(snapshot(second, rec.t_final));
  }
  rec.p2 = norm_sf(z2);
  rec.z = combine_standardized(w, z1, z2);
  rec.reject_combination = decide(rec.z, rec.cutoff).reject;

  if (irle && !adversarial && rec.d1_t1 < design.d12 &&
      final_all.d_events > final_first.d_events) {
    TwoStageSnapshots s;
    s.s1_t12 = rec.s1_t1;
    s.d1_t12 = rec.d1_t1;
    s.d12 = design.d12;
    s.s1_star = final_first.score;
    s.d1_star = final_first.d_events;
    s.s12_star = final_all.score;
    s.d12_star = final_all.d_events;
    const auto eq = equivalence_check(s, design.alpha);
    rec.ce_record = eq.record;
    rec.psi = eq.psi;
    rec.psi_agrees = eq.agree;
  }

  rec.t_window_end = std::max(sc.t_max(), rec.t_final);
  rec.d1_window_end = event_count(first, rec.t_window_end);
  rec.u1 = rec.d1_window_end > 0
               ? static_cast<double>(rec.d1_t1) / static_cast<double>(rec.d1_window_end)
               : 1.0;

  if (adversarial) {
    // The standardised first-stage statistic only moves at first-stage event times.
    rec.t_star = rec.t1;
    double best = z1;
    Snapshot best_snap = snap1;
    for (const auto& s : first) {
      const double t = s.event_time();
      if (t <= rec.t1 || t > rec.t_window_end) continue;
      const Snapshot snap = snapshot(first, t);
      const double z = detail::standardized_or_zero(snap);
      if (z > best) {
        best = z;
        best_snap = snap;
        rec.t_star = t;
      }
    }
    rec.d1_tstar = best_snap.d_events;
    rec.s1_tstar = best_snap.score;
  } else {
    rec.t_star = rec.t_final;
    rec.d1_tstar = final_first.d_events;
    rec.s1_tstar = final_first.score;
  }
  const double z1_star = rec.d1_tstar > 0 ? standardized_score(rec.s1_tstar, rec.d1_tstar) : 0.0;
  rec.z_star = combine_standardized(w, z1_star, z2);
  rec.reject_naive = decide(rec.z_star, rec.cutoff).reject;

  rec.information_deficit = static_cast<double>(rec.d_final - design.d12) -
                            static_cast<double>(rec.d1_final - rec.d1_t1);
  return rec;
}

inline void apply_corrected_cutoff(TrialRecord& rec, double k_star) {
  rec.k_star = k_star;
  rec.reject_corrected = decide(rec.z_star, k_star).reject;
}

/// Full pipeline for one trial. Without a cutoff function the corrected
/// cutoff is computed exactly for this trial's (w1, u1).
inline TrialRecord run_adaptive(const ScenarioConfig& sc, const AdaptiveRule& rule,
                                RngStream& rng, const CutoffFunction& kstar = {}) {
  TrialRecord rec = simulate_adaptive(sc, rule, rng);
  double k = rec.cutoff;
  if (rec.w1 > 0.0 && rec.u1 < 1.0) {
    k = kstar ? kstar(rec.w1, rec.u1) : corrected_kstar(rec.w1, rec.u1, sc.design.alpha);
  }
  apply_corrected_cutoff(rec, k);
  return rec;
}

// ---------------------------------------------------------------------------
// Corrected cutoffs over a (w1, u1) box

/// Bilinear interpolation of k* on a small grid covering a (w1, u1) box.
class KStarSurface {
 public:
  KStarSurface(double w1_lo, double w1_hi, double u1_lo, double u1_hi, Probability alpha,
               int nodes_per_axis = 4, int knot_segments = kDefaultKnots)
      : alpha_(alpha) {
    w1_ = axis(w1_lo, w1_hi, nodes_per_axis);
    u1_ = axis(u1_lo, u1_hi, nodes_per_axis);
    values_.assign(w1_.size(), std::vector<double>(u1_.size(), 0.0));
    for (std::size_t j = 0; j < u1_.size(); ++j) {
      if (u1_[j] >= 1.0) {
        for (std::size_t i = 0; i < w1_.size(); ++i) values_[i][j] = z_from_p(alpha);
        continue;
      }
      CrossingCurve curve(u1_[j], geometric_knots(u1_[j], knot_segments));
      for (std::size_t i = 0; i < w1_.size(); ++i) {
        values_[i][j] = corrected_kstar(curve, w1_[i], alpha);
      }
    }
  }

  double operator()(double w1, double u1) const {
    auto locate = [](const std::vector<double>& ax, double v, std::size_t& i, double& t) {
      if (ax.size() == 1) {
        i = 0;
        t = 0.0;
        return;
      }
      v = std::clamp(v, ax.front(), ax.back());
      i = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(ax.begin(), ax.end(), v) - ax.begin()),
          ax.size() - 1);
      i = i == 0 ? 0 : i - 1;
      t = (v - ax[i]) / (ax[i + 1] - ax[i]);
    };
    std::size_t i = 0, j = 0;
    double tw = 0.0, tu = 0.0;
    locate(w1_, w1, i, tw);
    locate(u1_, u1, j, tu);
    const auto at = [&](std::size_t a, std::size_t b) {
      return values_[std::min(a, w1_.size() - 1)][std::min(b, u1_.size() - 1)];
    };
    return (1 - tw) * (1 - tu) * at(i, j) + tw * (1 - tu) * at(i + 1, j) +
           (1 - tw) * tu * at(i, j + 1) + tw * tu * at(i + 1, j + 1);
  }

  const std::vector<double>& w1_axis() const { return w1_; }
  const std::vector<double>& u1_axis() const { return u1_; }

 private:
  static std::vector<double> axis(double lo, double hi, int n) {
    if (!(hi > lo) || n < 2) return {lo};
    std::vector<double> ax(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ax[i] = lo + (hi - lo) * i / (n - 1);
    return ax;
  }

  Probability alpha_;
  std::vector<double> w1_;
  std::vector<double> u1_;
  std::vector<std::vector<double>> values_;
};

// ---------------------------------------------------------------------------
// Operating characteristics

struct RateEstimate {
  std::int64_t rejections = 0;
  std::int64_t replications = 0;
  double rate() const { return replications ? static_cast<double>(rejections) / replications : 0.0; }
  double se() const {
    if (replications == 0) return 0.0;
    const double p = rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(replications));
  }
};

struct SimSummary {
  std::int64_t replications = 0;
  RateEstimate combination;
  RateEstimate naive;
  RateEstimate corrected;
  std::int64_t psi_evaluated = 0;
  std::int64_t psi_agreements = 0;
  double mean_d1_t1 = 0.0;
  double mean_d1_window_end = 0.0;
  double mean_d_final = 0.0;
  double mean_information_deficit = 0.0;
  double mean_w1 = 0.0;
  double mean_u1 = 0.0;
  double mean_k_star = 0.0;
};

struct SimOptions {
  int threads = 0;  // 0: hardware concurrency
  int knot_segments = kDefaultKnots;
  int kstar_nodes_per_axis = 4;
  bool keep_records = false;
};

struct SimResult {
  SimSummary summary;
  std::vector<TrialRecord> records;  // filled when keep_records
};

namespace detail {

template <class Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  auto workers = static_cast<std::int64_t>(threads > 0 ? threads : (hw ? hw : 1));
  workers = std::max<std::int64_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (std::int64_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::int64_t i = t; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Runs n_reps trials on streams RngStream::derive(seed, rep) and aggregates.
/// Results do not depend on the thread count.
inline SimResult operating_characteristics(const ScenarioConfig& sc, const AdaptiveRule& rule,
                                           std::int64_t n_reps, std::uint64_t seed,
                                           const SimOptions& opt = {}) {
  if (n_reps < 1) throw ValidationError("n_reps must be >= 1");
  sc.validate();
  if (const auto* inc = std::get_if<IncreaseEvents>(&rule)) {
    if (inc->d12_star <= sc.design.d12) throw ValidationError("d12_star must exceed d12");
    if (inc->d12_star > sc.n_subjects()) {
      throw InsufficientEvents("d12_star exceeds the number of subjects");
    }
  }
  if (sc.design.d12 > sc.n_subjects()) throw InsufficientEvents("d12 exceeds the number of subjects");

  std::vector<TrialRecord> records(static_cast<std::size_t>(n_reps));
  detail::parallel_for(n_reps, opt.threads, [&](std::int64_t r) {
    RngStream rng = RngStream::derive(seed, static_cast<std::uint64_t>(r));
    records[static_cast<std::size_t>(r)] = simulate_adaptive(sc, rule, rng);
  });

  double w_lo = 1.0, w_hi = 0.0, u_lo = 1.0, u_hi = 0.0;
  for (const auto& rec : records) {
    if (!(rec.w1 > 0.0) || rec.u1 >= 1.0) continue;
    w_lo = std::min(w_lo, rec.w1);
    w_hi = std::max(w_hi, rec.w1);
    u_lo = std::min(u_lo, rec.u1);
    u_hi = std::max(u_hi, rec.u1);
  }
  std::optional<KStarSurface> surface;
  if (w_hi >= w_lo) {
    surface.emplace(w_lo, w_hi, u_lo, u_hi, sc.design.alpha, opt.kstar_nodes_per_axis,
                    opt.knot_segments);
  }

  SimResult result;
  SimSummary& s = result.summary;
  s.replications = n_reps;
  for (auto& rec : records) {
    double k = rec.cutoff;
    if (surface && rec.w1 > 0.0 && rec.u1 < 1.0) k = (*surface)(rec.w1, rec.u1);
    apply_corrected_cutoff(rec, k);
    s.combination.rejections += rec.reject_combination;
    s.naive.rejections += rec.reject_naive;
    s.corrected.rejections += rec.reject_corrected;
    if (rec.psi_agrees) {
      ++s.psi_evaluated;
      s.psi_agreements += *rec.psi_agrees ? 1 : 0;
    }
    s.mean_d1_t1 += static_cast<double>(rec.d1_t1);
    s.mean_d1_window_end += static_cast<double>(rec.d1_window_end);
    s.mean_d_final += static_cast<double>(rec.d_final);
    s.mean_information_deficit += rec.information_deficit;
    s.mean_w1 += rec.w1;
    s.mean_u1 += rec.u1;
    s.mean_k_star += rec.k_star;
  }
  s.combination.replications = s.naive.replications = s.corrected.replications = n_reps;
  const auto n = static_cast<double>(n_reps);
  s.mean_d1_t1 /= n;
  s.mean_d1_window_end /= n;
  s.mean_d_final /= n;
  s.mean_information_deficit /= n;
  s.mean_w1 /= n;
  s.mean_u1 /= n;
  s.mean_k_star /= n;
  if (opt.keep_records) result.records = std::move(records);
  return result;
}

}  // namespace adsurv
