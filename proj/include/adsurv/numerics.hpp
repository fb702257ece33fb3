#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "adsurv/errors.hpp"

namespace adsurv {

/// A value in [0, 1]. Converts implicitly to double; construction is checked.
class Probability {
 public:
  constexpr Probability() = default;
  Probability(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("probability out of [0,1]: " + std::to_string(v));
    }
  }
  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }  // NOLINT

 private:
  double value_ = 0.0;
};

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal distribution function.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), accurate for large positive x.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation for the lower half, p in (0, 0.5].
inline double quantile_initial(double p) {
  constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
  constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
  constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double quantile_lower(double p) {
  double x = quantile_initial(p);
  for (int i = 0; i < 2; ++i) {
    const double e = norm_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace detail

/// Inverse of norm_cdf. Throws DomainError unless 0 < p < 1.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("norm_quantile requires 0 < p < 1, got " + std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  // 1 - p is exact for p >= 0.5, so the refinement always runs in the lower tail.
  return p < 0.5 ? detail::quantile_lower(p) : -detail::quantile_lower(1.0 - p);
}

// ---------------------------------------------------------------------------
// Quadrature

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule compute_gauss_legendre(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      dp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / dp;
      if (std::abs(z - z_prev) < 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule with n nodes on [-1, 1]. Rules are cached and shared.
inline const GaussLegendreRule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre needs at least one node");
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// Gauss-Legendre estimate of the integral of f over [lo, hi]; exact for
/// polynomials of degree <= 2 * nodes - 1.
template <class F>
double integrate(F&& f, double lo, double hi, int nodes = 64) {
  if (nodes < 2) throw DomainError("integrate needs nodes >= 2");
  const auto& rule = gauss_legendre(nodes);
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (int i = 0; i < nodes; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

// ---------------------------------------------------------------------------
// Root finding

/// Bracketed root finder: secant steps when they stay inside the bracket and
/// shrink it fast enough, bisection otherwise. The bracket never opens.
template <class F>
double find_root(F&& f, double lo, double hi, double tol, int max_iter = 200) {
  if (!(tol > 0.0)) throw DomainError("find_root needs tol > 0");
  if (lo > hi) std::swap(lo, hi);
  double flo = f(lo);
  double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi)) {
    throw NonFinite("find_root: non-finite value at bracket end");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw NoSignChange("find_root: f(lo) and f(hi) have the same sign");
  }
  bool last_was_secant = false;
  double last_width = hi - lo;
  for (int iter = 0; iter < max_iter && hi - lo > tol; ++iter) {
    const double width = hi - lo;
    double x = 0.5 * (lo + hi);
    // Fall back to bisection whenever the previous secant step failed to halve the bracket.
    if (!(last_was_secant && width > 0.5 * last_width)) {
      const double s = hi - fhi * (hi - lo) / (fhi - flo);
      const double margin = 1e-3 * width;
      if (s > lo + margin && s < hi - margin) {
        x = s;
        last_was_secant = true;
      } else {
        last_was_secant = false;
      }
    } else {
      last_was_secant = false;
    }
    last_width = width;
    const double fx = f(x);
    if (!std::isfinite(fx)) throw NonFinite("find_root: non-finite value inside bracket");
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
  }
  return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** seeded through splitmix64. Bit-reproducible across platforms:
/// uniform draws use only integer arithmetic and one exact scaling.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
  }

  /// Stream for worker/replication `index`, derived from `base_seed`.
  /// Rule: seed = splitmix64 output after advancing base_seed by (index + 1) golden steps.
  static RngStream derive(std::uint64_t base_seed, std::uint64_t index) {
    std::uint64_t sm = base_seed + 0x9E3779B97F4A7C15ULL * index;
    return RngStream(splitmix64(sm));
  }

  std::uint64_t seed() const { return seed_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal (Marsaglia polar method; the second variate is cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Unit-rate exponential by inversion.
  double exponential() { return -std::log(uniform()); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double sample_uniform(RngStream& rng) { return rng.uniform(); }
inline double sample_std_normal(RngStream& rng) { return rng.normal(); }

}  // namespace adsurv
