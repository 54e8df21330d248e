#pragma once

#include <algorithm>
#include <cmath>

#include "geocert/errors.hpp"

namespace geocert {

// Closed interval [lo, hi]. Enclosures computed with ordinary double
// arithmetic; extrema of cos/sin are taken exactly when the argument range
// spans a critical point, so the only slack is endpoint rounding.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw InvalidInput("interval bounds out of order");
  }
  static Interval point(double v) { return Interval(v, v); }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  // sup |t| over the interval
  double abs_sup() const { return std::max(std::abs(lo), std::abs(hi)); }
};

inline Interval operator+(const Interval& a, const Interval& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}
inline Interval operator-(const Interval& a, const Interval& b) {
  return {a.lo - b.hi, a.hi - b.lo};
}
inline Interval operator+(const Interval& a, double s) { return {a.lo + s, a.hi + s}; }
inline Interval operator+(double s, const Interval& a) { return a + s; }
inline Interval operator-(double s, const Interval& a) { return {s - a.hi, s - a.lo}; }

inline Interval operator*(double s, const Interval& a) {
  return s >= 0 ? Interval{s * a.lo, s * a.hi} : Interval{s * a.hi, s * a.lo};
}

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min(std::min(p1, p2), std::min(p3, p4)),
          std::max(std::max(p1, p2), std::max(p3, p4))};
}

inline Interval square(const Interval& a) {
  if (a.lo >= 0) return {a.lo * a.lo, a.hi * a.hi};
  if (a.hi <= 0) return {a.hi * a.hi, a.lo * a.lo};
  return {0.0, std::max(a.lo * a.lo, a.hi * a.hi)};
}

// 1/a; requires 0 not in [a.lo, a.hi]
inline Interval reciprocal(const Interval& a) {
  if (a.lo <= 0.0 && a.hi >= 0.0)
    throw SingularTransform("interval reciprocal across zero");
  return {1.0 / a.hi, 1.0 / a.lo};
}

inline Interval operator/(double s, const Interval& a) {
  return s * reciprocal(a);
}

namespace detail {
// Is there an integer k with lo <= period*k + offset <= hi?
inline bool contains_grid_point(double lo, double hi, double period, double offset) {
  const double k = std::ceil((lo - offset) / period);
  return offset + period * k <= hi;
}
}  // namespace detail

// Range of cos over [t.lo, t.hi]: exact +-1 extrema when a critical point
// lies inside, endpoint evaluation otherwise.
inline Interval interval_cos(const Interval& t) {
  constexpr double kPi = 3.141592653589793238462643383279502884;
  const double clo = std::cos(t.lo), chi = std::cos(t.hi);
  double lo = std::min(clo, chi), hi = std::max(clo, chi);
  if (detail::contains_grid_point(t.lo, t.hi, 2 * kPi, 0.0)) hi = 1.0;
  if (detail::contains_grid_point(t.lo, t.hi, 2 * kPi, kPi)) lo = -1.0;
  return {lo, hi};
}

// Range of sin over [t.lo, t.hi].
inline Interval interval_sin(const Interval& t) {
  constexpr double kPi = 3.141592653589793238462643383279502884;
  const double slo = std::sin(t.lo), shi = std::sin(t.hi);
  double lo = std::min(slo, shi), hi = std::max(slo, shi);
  if (detail::contains_grid_point(t.lo, t.hi, 2 * kPi, kPi / 2)) hi = 1.0;
  if (detail::contains_grid_point(t.lo, t.hi, 2 * kPi, -kPi / 2)) lo = -1.0;
  return {lo, hi};
}

}  // namespace geocert
