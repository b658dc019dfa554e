#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "tdiff/errors.hpp"

namespace tdiff {

inline constexpr int kBesselMaxOrder = 60;
inline constexpr double kBesselMaxArgument = 50.0;

namespace detail {

inline double bessel_j_series(int n, double x) {
  const double half = 0.5 * x;
  double term = std::exp(n * std::log(half) - std::lgamma(n + 1.0));
  double sum = term;
  const double q = half * half;
  for (int m = 1; m < 200; ++m) {
    term *= -q / (static_cast<double>(m) * (m + n));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Miller's backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized
// with J_0 + 2 sum_{k>=1} J_{2k} = 1.
inline double bessel_j_miller(int n, double x) {
  const double top = std::max(static_cast<double>(n), x);
  int start = static_cast<int>(top + 30.0 + std::sqrt(40.0 * top));
  start += start % 2;
  constexpr double kBig = 1e250;
  constexpr double kSmall = 1e-250;
  double next = 0.0;  // J_{k+1}
  double cur = 1.0;   // J_k, arbitrary scale
  double norm = 0.0;
  double result = 0.0;
  for (int k = start; k > 0; --k) {
    const double prev = (2.0 * k / x) * cur - next;
    next = cur;
    cur = prev;  // now J_{k-1}
    if (std::abs(cur) > kBig) {
      cur *= kSmall;
      next *= kSmall;
      norm *= kSmall;
      result *= kSmall;
    }
    const int idx = k - 1;
    if (idx == n) result = cur;
    if (idx > 0 && idx % 2 == 0) norm += 2.0 * cur;
  }
  norm += cur;  // J_0
  return result / norm;
}

}  // namespace detail

/// Bessel function of the first kind J_n(x) for 0 <= n <= 60, 0 <= x <= 50.
inline double bessel_j(int n, double x) {
  if (n < 0 || n > kBesselMaxOrder || !(x >= 0.0) || x > kBesselMaxArgument) {
    throw DomainError(fmt::format("bessel_j({}, {}) outside supported envelope n in [0, {}], x in [0, {}]",
                                  n, x, kBesselMaxOrder, kBesselMaxArgument));
  }
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x < 2.0) return detail::bessel_j_series(n, x);
  return detail::bessel_j_miller(n, x);
}

/// J_n for signed n via J_{-n} = (-1)^n J_n.
inline double bessel_j_signed(int n, double x) {
  const double v = bessel_j(std::abs(n), x);
  return (n < 0 && (std::abs(n) % 2 == 1)) ? -v : v;
}

}  // namespace tdiff
