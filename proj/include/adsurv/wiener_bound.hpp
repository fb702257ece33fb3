#pragma once

// Boundary-crossing probabilities for Brownian motion with drift, and the
// quantities built on them: the worst-case type I error of a combination
// test whose first-stage follow-up end is chosen after the fact, the
// corrected cutoff k* that restores level alpha, and conditional power.
//
// B(u) = 2 S1(u) / sqrt(D1(Tmax)) is Brownian motion in information time u
// with drift xi = theta * sqrt(D1(Tmax) / 4). The monitored statistic
// Z(u) = w1 B(u) / sqrt(u) + w2 z2 crosses a cutoff k iff B(u) exceeds the
// square-root boundary sqrt(u) * (k - w2 z2) / w1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "adsurv/combo_test.hpp"
#include "adsurv/errors.hpp"
#include "adsurv/numerics.hpp"

namespace adsurv {

/// Boundary a*u + b on 0 < u <= c.
struct LinearSegment {
  double a = 0.0;
  double b = 1.0;
  double c = 1.0;
};

/// P{B(u) < a u + b for all 0 < u <= c} for B with B(0) = 0 and drift `drift`.
/// Drift enters as a slope shift; the conditional bridge term is drift-free.
inline Probability linear_noncross(const LinearSegment& seg, double drift = 0.0) {
  if (!(seg.b > 0.0)) throw InvalidBoundary("linear_noncross requires b > 0");
  if (!(seg.c > 0.0)) throw InvalidBoundary("linear_noncross requires c > 0");
  const double a = seg.a - drift;
  const double sc = std::sqrt(seg.c);
  const double first = norm_cdf((a * seg.c + seg.b) / sc);
  const double tail = norm_cdf((a * seg.c - seg.b) / sc);
  const double second = tail > 0.0 ? std::exp(-2.0 * a * seg.b + std::log(tail)) : 0.0;
  return std::clamp(first - second, 0.0, 1.0);
}

/// Discretisation controls for the knot-conditioning recursion.
struct GridOptions {
  /// Grid step as a fraction of the smallest segment's standard deviation.
  double step_scale = 0.5;
  /// Half-width (in standard deviations) of the support kept for each knot value.
  double sd_range = 9.0;
  int min_nodes = 33;
  int max_nodes = 20001;
};

namespace detail {

// Mass of the sub-probability law of B(g_i) restricted to paths that have not
// crossed, carried on a uniform grid ending exactly at the boundary value.
struct Layer {
  double lo = 0.0;
  double step = 0.0;
  std::vector<double> mass;  // density * quadrature weight

  double node(std::size_t j) const { return lo + step * static_cast<double>(j); }
};

inline std::vector<double> simpson_weights(std::size_t n, double step) {
  std::vector<double> w(n, 0.0);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = (j == 0 || j == n - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    w[j] *= step / 3.0;
  }
  return w;
}

// Grid on [top - k*step, top] with an odd node count for Simpson's rule.
// Returns an empty layer when the boundary sits below the relevant support.
inline Layer make_grid(double mean, double sd, double top, double step,
                       const GridOptions& opt) {
  Layer layer;
  const double lo_target = mean - opt.sd_range * sd;
  if (!(top > lo_target)) return layer;
  const double span = top - lo_target;
  auto intervals = static_cast<std::int64_t>(std::ceil(span / step));
  intervals = std::max<std::int64_t>(intervals, opt.min_nodes - 1);
  if (intervals % 2 == 1) ++intervals;
  if (intervals + 1 > opt.max_nodes) {
    intervals = opt.max_nodes - 1;
    if (intervals % 2 == 1) --intervals;
  }
  layer.step = span / static_cast<double>(intervals);
  layer.lo = top - layer.step * static_cast<double>(intervals);
  layer.mass.assign(static_cast<std::size_t>(intervals + 1), 0.0);
  return layer;
}

}  // namespace detail

/// Probability that Brownian motion with drift, started at B(0) = 0, stays
/// strictly below the piecewise-linear boundary through (knots[i], bounds[i])
/// on [knots.front(), knots.back()]. Knot values are integrated out one knot
/// at a time; within a segment the exact bridge factor
/// 1 - exp(-2 (b_i - x_i)(b_{i+1} - x_{i+1}) / du) accounts for crossings.
/// The last segment is integrated in closed form.
inline Probability piecewise_noncross(std::span<const double> knots,
                                      std::span<const double> bounds, double drift = 0.0,
                                      const GridOptions& opt = {}) {
  if (knots.size() < 2 || knots.size() != bounds.size()) {
    throw ValidationError("piecewise_noncross needs >= 2 knots with matching boundary values");
  }
  if (knots.front() < 0.0) throw ValidationError("knots must be non-negative");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) throw ValidationError("knots must be strictly increasing");
  }
  for (double b : bounds) {
    if (!std::isfinite(b)) throw InvalidBoundary("boundary values must be finite");
  }
  const std::size_t segments = knots.size() - 1;

  double min_du = knots.back() - knots.front();
  for (std::size_t i = 1; i < knots.size(); ++i) min_du = std::min(min_du, knots[i] - knots[i - 1]);
  const double step = opt.step_scale * std::sqrt(min_du);

  detail::Layer layer;
  if (knots.front() == 0.0) {
    if (!(bounds.front() > 0.0)) throw InvalidBoundary("boundary at u = 0 must be positive");
    layer.lo = 0.0;
    layer.step = 0.0;
    layer.mass = {1.0};
  } else {
    const double g0 = knots.front();
    const double sd = std::sqrt(g0);
    layer = detail::make_grid(drift * g0, sd, bounds.front(), step, opt);
    if (layer.mass.empty()) return 0.0;
    const auto w = detail::simpson_weights(layer.mass.size(), layer.step);
    for (std::size_t j = 0; j < layer.mass.size(); ++j) {
      layer.mass[j] = w[j] * norm_pdf((layer.node(j) - drift * g0) / sd) / sd;
    }
  }

  for (std::size_t i = 0; i + 1 < segments; ++i) {
    const double du = knots[i + 1] - knots[i];
    const double sd_du = std::sqrt(du);
    const double g_next = knots[i + 1];
    detail::Layer next =
        detail::make_grid(drift * g_next, std::sqrt(g_next), bounds[i + 1], step, opt);
    if (next.mass.empty()) return 0.0;
    const auto wy = detail::simpson_weights(next.mass.size(), next.step);
    const double c_here = bounds[i];
    const double c_next = bounds[i + 1];
    const double window = opt.sd_range * sd_du;
    const double inv_sd = 1.0 / sd_du;
    const double bridge_scale = -2.0 / du;

    for (std::size_t k = 0; k < next.mass.size(); ++k) {
      const double y = next.node(k);
      const double centre = y - drift * du;  // x values near `centre` feed y
      std::size_t j_lo = 0;
      std::size_t j_hi = layer.mass.size();
      if (layer.step > 0.0) {
        const double a = std::floor((centre - window - layer.lo) / layer.step);
        const double b = std::ceil((centre + window - layer.lo) / layer.step);
        j_lo = static_cast<std::size_t>(std::clamp(a, 0.0, static_cast<double>(layer.mass.size())));
        j_hi = static_cast<std::size_t>(
            std::clamp(b + 1.0, 0.0, static_cast<double>(layer.mass.size())));
      }
      double acc = 0.0;
      const double gap_next = c_next - y;
      for (std::size_t j = j_lo; j < j_hi; ++j) {
        const double x = layer.node(j);
        const double z = (centre - x) * inv_sd;
        const double bridge = -std::expm1(bridge_scale * (c_here - x) * gap_next);
        acc += layer.mass[j] * norm_pdf(z) * inv_sd * bridge;
      }
      next.mass[k] = wy[k] * acc;
    }
    layer = std::move(next);
  }

  const double du = knots[segments] - knots[segments - 1];
  const double slope = (bounds[segments] - bounds[segments - 1]) / du;
  double total = 0.0;
  for (std::size_t j = 0; j < layer.mass.size(); ++j) {
    const double gap = bounds[segments - 1] - layer.node(j);
    if (gap <= 0.0 || layer.mass[j] == 0.0) continue;
    total += layer.mass[j] * linear_noncross({slope, gap, du}, drift);
  }
  return std::clamp(total, 0.0, 1.0);
}

/// Knot grid u1 = g0 < g1 < ... < gm = 1, geometric in u (denser near u1).
inline std::vector<double> geometric_knots(double u1, int segments) {
  if (!(u1 > 0.0 && u1 < 1.0)) throw ValidationError("geometric_knots requires 0 < u1 < 1");
  if (segments < 1) throw ValidationError("need at least one segment");
  std::vector<double> g(static_cast<std::size_t>(segments) + 1);
  for (int i = 0; i <= segments; ++i) {
    g[i] = u1 * std::pow(1.0 / u1, static_cast<double>(i) / segments);
  }
  g.front() = u1;
  g.back() = 1.0;
  return g;
}

inline constexpr int kDefaultKnots = 16;
inline constexpr int kDefaultOuterNodes = 64;
inline constexpr double kOuterRange = 8.0;

/// Inputs of the worst-case-bound and k* computations.
struct BoundaryProblem {
  double w1 = 0.5;
  double u1 = 0.5;
  Probability alpha = 0.025;
  double drift = 0.0;
  std::vector<double> knots;  // empty: geometric grid with kDefaultKnots segments

  void validate() const {
    if (!(w1 > 0.0 && w1 <= 1.0)) throw ValidationError("w1 must lie in (0,1]");
    if (!(u1 > 0.0 && u1 <= 1.0)) throw ValidationError("u1 must lie in (0,1]");
    if (!knots.empty()) {
      if (knots.front() != u1 || knots.back() != 1.0) {
        throw ValidationError("knot grid must run from u1 to 1");
      }
    }
  }

  std::vector<double> resolved_knots() const {
    if (!knots.empty() || u1 >= 1.0) return knots;
    return geometric_knots(u1, kDefaultKnots);
  }
};

/// G(h) = P{B(u) >= h sqrt(u) for some u in [u1, 1]} under drift `drift`,
/// with the square-root boundary replaced by its chords between knots.
inline double sqrt_crossing(double h, double u1, std::span<const double> knots,
                            double drift = 0.0, const GridOptions& opt = {}) {
  if (u1 >= 1.0) return norm_sf(h - drift);
  std::vector<double> bounds(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) bounds[i] = h * std::sqrt(knots[i]);
  return 1.0 - piecewise_noncross(knots, bounds, drift, opt);
}

/// Crossing probability of Z(u) over [u1, 1] against `cutoff`, given p2.
inline Probability sqrt_crossing_given_p2(const BoundaryProblem& bp, double cutoff,
                                          Probability p2, const GridOptions& opt = {}) {
  if (!(bp.u1 > 0.0 && bp.u1 <= 1.0)) throw ValidationError("u1 must lie in (0,1]");
  const Weights w = Weights::from_first(std::clamp(bp.w1, 0.0, 1.0));
  const double z2 = z_from_p(p2);
  if (w.w1() < 1e-12) return (w.w2() * z2 > cutoff) ? 1.0 : 0.0;
  const double h = (cutoff - w.w2() * z2) / w.w1();
  const auto knots = bp.resolved_knots();
  return std::clamp(sqrt_crossing(h, bp.u1, knots, bp.drift, opt), 0.0, 1.0);
}

/// Tabulated G(h) for fixed (u1, knots, drift), cubic-spline interpolated.
class CrossingCurve {
 public:
  CrossingCurve(double u1, std::vector<double> knots, double drift = 0.0, double h_step = 0.1,
                const GridOptions& opt = {})
      : u1_(u1), drift_(drift), knots_(std::move(knots)) {
    h_lo_ = -kOuterRange - 1.0 + std::min(0.0, drift);
    h_hi_ = kOuterRange + 2.0 + std::max(0.0, drift);
    const auto n = static_cast<std::size_t>(std::ceil((h_hi_ - h_lo_) / h_step)) + 1;
    step_ = (h_hi_ - h_lo_) / static_cast<double>(n - 1);
    values_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      values_[i] = sqrt_crossing(h_lo_ + step_ * static_cast<double>(i), u1_, knots_, drift_, opt);
    }
    build_spline();
  }

  double operator()(double h) const {
    if (h <= h_lo_) return values_.front();
    if (h >= h_hi_) return values_.back();
    const double pos = (h - h_lo_) / step_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= values_.size() - 1) i = values_.size() - 2;
    const double t = pos - static_cast<double>(i);
    const double a = 1.0 - t;
    const double v = a * values_[i] + t * values_[i + 1] +
                     ((a * a * a - a) * second_[i] + (t * t * t - t) * second_[i + 1]) *
                         step_ * step_ / 6.0;
    return std::clamp(v, 0.0, 1.0);
  }

  double u1() const { return u1_; }
  double drift() const { return drift_; }

 private:
  // Natural cubic spline second derivatives on the uniform grid.
  void build_spline() {
    const std::size_t n = values_.size();
    second_.assign(n, 0.0);
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double rhs = 6.0 * (values_[i + 1] - 2.0 * values_[i] + values_[i - 1]) /
                         (step_ * step_);
      const double denom = 4.0 - c[i - 1];
      c[i] = 1.0 / denom;
      d[i] = (rhs - d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      second_[i] = d[i] - c[i] * second_[i + 1];
      if (i == 1) break;
    }
  }

  double u1_;
  double drift_;
  std::vector<double> knots_;
  double h_lo_ = 0.0;
  double h_hi_ = 0.0;
  double step_ = 0.1;
  std::vector<double> values_;
  std::vector<double> second_;
};

/// Integral over p2 of a crossing probability g(h(z2)), written in
/// z2 = Phi^-1(1 - p2) against the standard normal density on [-8, 8].
template <class CrossingFn>
double integrate_over_p2(CrossingFn&& crossing, double w1, double cutoff,
                         int outer_nodes = kDefaultOuterNodes) {
  const Weights w = Weights::from_first(w1);
  auto f = [&](double z) {
    if (w.w1() < 1e-12) return (w.w2() * z > cutoff ? 1.0 : 0.0) * norm_pdf(z);
    return crossing((cutoff - w.w2() * z) / w.w1()) * norm_pdf(z);
  };
  if (w.w2() < 1e-12) return integrate(f, -kOuterRange, kOuterRange, outer_nodes);
  // Concentrate nodes where h = (cutoff - w2 z) / w1 sweeps over [-8, 8].
  const double a = std::clamp((cutoff - kOuterRange * w.w1()) / w.w2(), -kOuterRange, kOuterRange);
  const double b = std::clamp((cutoff + kOuterRange * w.w1()) / w.w2(), -kOuterRange, kOuterRange);
  const int side = std::max(8, outer_nodes / 4);
  double total = 0.0;
  if (a > -kOuterRange) total += integrate(f, -kOuterRange, a, side);
  if (b > a) total += integrate(f, a, b, outer_nodes);
  if (b < kOuterRange) total += integrate(f, b, kOuterRange, side);
  return total;
}

/// p2-integrated crossing probability at `cutoff`, evaluated directly at
/// every outer node (no interpolation).
inline Probability crossing_probability(const BoundaryProblem& bp, double cutoff,
                                        int outer_nodes = kDefaultOuterNodes,
                                        const GridOptions& opt = {}) {
  bp.validate();
  const auto knots = bp.resolved_knots();
  const double p = integrate_over_p2(
      [&](double h) { return sqrt_crossing(h, bp.u1, knots, bp.drift, opt); }, bp.w1, cutoff,
      outer_nodes);
  return std::clamp(p, 0.0, 1.0);
}

/// Worst-case type I error of the naive statistic Z* when the end of
/// first-stage follow-up may be chosen anywhere in information time [u1, 1].
inline Probability worst_case_alpha(double w1, double u1, Probability alpha,
                                    int knot_segments = kDefaultKnots,
                                    int outer_nodes = kDefaultOuterNodes) {
  BoundaryProblem bp{w1, u1, alpha, 0.0, {}};
  if (u1 < 1.0) bp.knots = geometric_knots(u1, knot_segments);
  return crossing_probability(bp, z_from_p(alpha), outer_nodes);
}

/// Root of the crossing integral in k over [Phi^-1(1 - alpha), 6] for a
/// pre-tabulated crossing curve.
inline double corrected_kstar(const CrossingCurve& curve, double w1, Probability alpha,
                              int outer_nodes = kDefaultOuterNodes) {
  const double k_lo = z_from_p(alpha);
  if (curve.u1() >= 1.0) return k_lo;
  auto excess = [&](double k) { return integrate_over_p2(curve, w1, k, outer_nodes) - alpha; };
  if (excess(k_lo) <= 0.0) return k_lo;
  return find_root(excess, k_lo, 6.0, 1e-7);
}

/// Cutoff k* for Z* that makes the worst-case crossing probability equal alpha.
inline double corrected_kstar(double w1, double u1, Probability alpha,
                              int knot_segments = kDefaultKnots,
                              int outer_nodes = kDefaultOuterNodes) {
  if (!(u1 > 0.0 && u1 <= 1.0)) throw ValidationError("u1 must lie in (0,1]");
  if (!(w1 > 0.0 && w1 <= 1.0)) throw ValidationError("w1 must lie in (0,1]");
  if (u1 >= 1.0) return z_from_p(alpha);
  CrossingCurve curve(u1, geometric_knots(u1, knot_segments));
  return corrected_kstar(curve, w1, alpha, outer_nodes);
}

/// k* on a grid: result[i][j] for w1_grid[i], u1_grid[j]. One crossing curve
/// per u1 value is shared across the w1 row entries.
inline std::vector<std::vector<double>> kstar_table(std::span<const double> w1_grid,
                                                    std::span<const double> u1_grid,
                                                    Probability alpha,
                                                    int knot_segments = kDefaultKnots,
                                                    int outer_nodes = kDefaultOuterNodes) {
  if (w1_grid.empty() || u1_grid.empty()) throw ValidationError("kstar_table grids must be nonempty");
  std::vector<std::vector<double>> table(w1_grid.size(), std::vector<double>(u1_grid.size()));
  for (std::size_t j = 0; j < u1_grid.size(); ++j) {
    const double u1 = u1_grid[j];
    if (u1 >= 1.0) {
      for (std::size_t i = 0; i < w1_grid.size(); ++i) table[i][j] = z_from_p(alpha);
      continue;
    }
    CrossingCurve curve(u1, geometric_knots(u1, knot_segments));
    for (std::size_t i = 0; i < w1_grid.size(); ++i) {
      table[i][j] = corrected_kstar(curve, w1_grid[i], alpha, outer_nodes);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Conditional power given p2

struct PowerInputs {
  Weights w = Weights::from_first(0.5);
  std::int64_t d1_t1 = 1;
  std::int64_t d1_tmax = 1;
  double theta_R = 0.0;
  Probability alpha = 0.025;
  double k_star = 1.959963984540054;

  void validate() const {
    if (d1_t1 < 1 || d1_tmax < d1_t1) throw ValidationError("need 1 <= D1(T1) <= D1(Tmax)");
    if (theta_R < 0.0) throw ValidationError("theta_R must be >= 0");
    if (!(w.w1() > 0.0)) throw ValidationError("power curves need w1 > 0");
  }

  double u1() const { return static_cast<double>(d1_t1) / static_cast<double>(d1_tmax); }
  double drift() const { return theta_R * std::sqrt(static_cast<double>(d1_tmax) / 4.0); }
};

namespace detail {

inline double fixed_time_power(const PowerInputs& pi, double cutoff, std::int64_t d1,
                               Probability p2) {
  pi.validate();
  const double z2 = z_from_p(p2);
  const double mean = pi.theta_R * std::sqrt(static_cast<double>(d1)) / 2.0;
  return norm_sf((cutoff - pi.w.w2() * z2) / pi.w.w1() - mean);
}

}  // namespace detail

/// A: the prespecified adaptive test, cutoff Phi^-1(1 - alpha), data at T1.
inline Probability power_A(const PowerInputs& pi, Probability p2) {
  return detail::fixed_time_power(pi, z_from_p(pi.alpha), pi.d1_t1, p2);
}

/// B: cutoff k* but the trial ends at T1 anyway.
inline Probability power_B(const PowerInputs& pi, Probability p2) {
  return detail::fixed_time_power(pi, pi.k_star, pi.d1_t1, p2);
}

/// C: cutoff k* with all first-stage events observed (data at Tmax).
inline Probability power_C(const PowerInputs& pi, Probability p2) {
  return detail::fixed_time_power(pi, pi.k_star, pi.d1_tmax, p2);
}

/// D: cutoff k* with follow-up stopped where Z(t) peaks over [T1, Tmax].
inline Probability power_D(const PowerInputs& pi, Probability p2,
                           int knot_segments = kDefaultKnots, const GridOptions& opt = {}) {
  pi.validate();
  BoundaryProblem bp{pi.w.w1(), pi.u1(), pi.alpha, pi.drift(), {}};
  if (bp.u1 < 1.0) bp.knots = geometric_knots(bp.u1, knot_segments);
  return sqrt_crossing_given_p2(bp, pi.k_star, p2, opt);
}

struct PowerPoint {
  double p2;
  double a, b, c, d;
};

/// A-D on a p2 grid. D reuses one drifted crossing curve.
inline std::vector<PowerPoint> power_curves(const PowerInputs& pi, std::span<const double> p2_grid,
                                            int knot_segments = kDefaultKnots) {
  pi.validate();
  std::vector<PowerPoint> out;
  out.reserve(p2_grid.size());
  const double u1 = pi.u1();
  std::vector<double> knots;
  if (u1 < 1.0) knots = geometric_knots(u1, knot_segments);
  for (double p2 : p2_grid) {
    const double h = (pi.k_star - pi.w.w2() * z_from_p(p2)) / pi.w.w1();
    out.push_back({p2, power_A(pi, p2), power_B(pi, p2), power_C(pi, p2),
                   sqrt_crossing(h, u1, knots, pi.drift())});
  }
  return out;
}

}  // namespace adsurv
