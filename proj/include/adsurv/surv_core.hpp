#pragma once

// Survival data model: administrative censoring at a calendar time, the
// logrank score process, event-count clocks and Kaplan-Meier curves.
//
// Sign convention used throughout the library: the logrank score is the
// observed-minus-expected number of Control-arm events, so score > 0 means
// the Experimental arm is doing better (theta > 0 under the alternative).

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adsurv/errors.hpp"

namespace adsurv {

enum class Arm : std::uint8_t { Control, Experimental };
enum class Stage : std::uint8_t { First, Second };

/// One patient: calendar entry time, latent survival time since entry (months).
struct SubjectRecord {
  double entry = 0.0;
  double surv = 1.0;
  Arm arm = Arm::Control;
  Stage stage = Stage::First;

  double event_time() const { return entry + surv; }

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

/// Logrank summary of a subject set at a calendar time.
struct Snapshot {
  double calendar_time = 0.0;
  std::int64_t d_events = 0;
  double score = 0.0;
};

/// Optional extra calendar-time censoring per stage, applied on top of the
/// analysis time (first-stage patients censored at T12 while second-stage
/// patients are followed to T12*, for instance).
struct CensorPlan {
  std::optional<double> first_stage;
  std::optional<double> second_stage;

  double cutoff(Stage s, double t) const {
    const auto& extra = s == Stage::First ? first_stage : second_stage;
    return extra ? std::min(t, *extra) : t;
  }
};

namespace detail {

struct Observation {
  double time;  // since entry
  bool event;
  bool control;
};

inline std::vector<Observation> observe(std::span<const SubjectRecord> data, double t,
                                        const CensorPlan& plan) {
  std::vector<Observation> obs;
  obs.reserve(data.size());
  for (const auto& s : data) {
    const double cutoff = plan.cutoff(s.stage, t);
    if (!(s.entry < cutoff)) continue;
    const bool event = s.entry + s.surv <= cutoff;
    obs.push_back({event ? s.surv : cutoff - s.entry, event, s.arm == Arm::Control});
  }
  // Events sort ahead of censorings at equal times; censored subjects stay at risk.
  std::sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.event && !b.event;
  });
  return obs;
}

}  // namespace detail

/// Event count and logrank score at calendar time t. Tied event times use
/// O - E = d_C - d * n_C / n per distinct time.
inline Snapshot snapshot(std::span<const SubjectRecord> data, double t,
                         const CensorPlan& plan = {}) {
  Snapshot snap{t, 0, 0.0};
  const auto obs = detail::observe(data, t, plan);
  auto at_risk = static_cast<std::int64_t>(obs.size());
  std::int64_t at_risk_control = 0;
  for (const auto& o : obs) at_risk_control += o.control ? 1 : 0;

  std::size_t i = 0;
  while (i < obs.size()) {
    const double time = obs[i].time;
    std::int64_t d = 0, d_control = 0, removed = 0, removed_control = 0;
    for (; i < obs.size() && obs[i].time == time; ++i) {
      ++removed;
      if (obs[i].control) ++removed_control;
      if (obs[i].event) {
        ++d;
        if (obs[i].control) ++d_control;
      }
    }
    if (d > 0) {
      snap.d_events += d;
      snap.score += static_cast<double>(d_control) -
                    static_cast<double>(d) * static_cast<double>(at_risk_control) /
                        static_cast<double>(at_risk);
    }
    at_risk -= removed;
    at_risk_control -= removed_control;
  }
  return snap;
}

/// Calendar times at which events occur, sorted ascending (duplicates kept).
inline std::vector<double> event_calendar_times(std::span<const SubjectRecord> data) {
  std::vector<double> times;
  times.reserve(data.size());
  for (const auto& s : data) times.push_back(s.event_time());
  std::sort(times.begin(), times.end());
  return times;
}

/// Calendar time of the d-th event, i.e. min{t : D(t) = d}.
inline double calendar_time_of_event_count(std::span<const SubjectRecord> data,
                                           std::int64_t d) {
  if (d < 1) throw ValidationError("event count must be >= 1");
  if (static_cast<std::size_t>(d) > data.size()) {
    throw InsufficientEvents("requested event " + std::to_string(d) + " but only " +
                             std::to_string(data.size()) + " subjects");
  }
  std::vector<double> times;
  times.reserve(data.size());
  for (const auto& s : data) times.push_back(s.event_time());
  auto nth = times.begin() + (d - 1);
  std::nth_element(times.begin(), nth, times.end());
  return *nth;
}

inline std::int64_t event_count(std::span<const SubjectRecord> data, double t) {
  std::int64_t d = 0;
  for (const auto& s : data) d += (s.entry + s.surv <= t) ? 1 : 0;
  return d;
}

/// Information time u = D1(t) / D1(t_max) for the first-stage subject set.
inline double information_time(std::span<const SubjectRecord> first_stage, double t,
                               double t_max) {
  if (t > t_max) throw ValidationError("information_time requires t <= t_max");
  const auto d_max = event_count(first_stage, t_max);
  if (d_max == 0) throw ZeroInformation("no first-stage events by t_max");
  return static_cast<double>(event_count(first_stage, t)) / static_cast<double>(d_max);
}

inline std::vector<SubjectRecord> select_stage(std::span<const SubjectRecord> data,
                                               Stage stage) {
  std::vector<SubjectRecord> out;
  for (const auto& s : data) {
    if (s.stage == stage) out.push_back(s);
  }
  return out;
}

struct KmStep {
  double time;
  double survival;
};

/// Product-limit curve; the first step is (0, 1) and later steps sit at event times.
struct KmCurve {
  std::vector<KmStep> steps;

  double at(double time) const {
    double s = 1.0;
    for (const auto& step : steps) {
      if (step.time > time) break;
      s = step.survival;
    }
    return s;
  }
};

inline KmCurve km_curve(std::span<const SubjectRecord> data, double t, Arm arm,
                        const CensorPlan& plan = {}) {
  std::vector<SubjectRecord> arm_data;
  for (const auto& s : data) {
    if (s.arm == arm) arm_data.push_back(s);
  }
  const auto obs = detail::observe(arm_data, t, plan);
  KmCurve curve;
  curve.steps.push_back({0.0, 1.0});
  auto at_risk = static_cast<std::int64_t>(obs.size());
  double s = 1.0;
  std::size_t i = 0;
  while (i < obs.size()) {
    const double time = obs[i].time;
    std::int64_t d = 0, removed = 0;
    for (; i < obs.size() && obs[i].time == time; ++i) {
      ++removed;
      if (obs[i].event) ++d;
    }
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      curve.steps.push_back({time, s});
    }
    at_risk -= removed;
  }
  return curve;
}

}  // namespace adsurv
