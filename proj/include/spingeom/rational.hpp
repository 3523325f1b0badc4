#pragma once

#include "spingeom/common.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace spingeom {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Recovers p/q from a double produced by a short decimal or simple fraction.
/// Accepts only when p/q reproduces x to within a few ulps and q <= max_den;
/// the small default denominator keeps generic doubles from passing.
inline std::optional<Rational> rationalize(double x, long long max_den = 100000) {
  if (!std::isfinite(x)) return std::nullopt;
  if (x == 0.0) return Rational(0);
  const bool neg = x < 0.0;
  const double ax = std::abs(x);
  // Continued fraction convergents.
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = ax;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(r);
    if (a > 9.0e15) break;
    const long long ai = static_cast<long long>(a);
    const __int128 p2 = static_cast<__int128>(ai) * p1 + p0;
    const __int128 q2 = static_cast<__int128>(ai) * q1 + q0;
    if (q2 > max_den || p2 > static_cast<__int128>(9'000'000'000'000'000'000LL)) break;
    p0 = p1;
    q0 = q1;
    p1 = static_cast<long long>(p2);
    q1 = static_cast<long long>(q2);
    const double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::abs(approx - ax) <= 4.0 * std::numeric_limits<double>::epsilon() * ax) {
      Rational out{BigInt(p1), BigInt(q1)};
      return neg ? Rational(-out) : out;
    }
    const double frac = r - a;
    if (frac <= 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

inline std::string to_string(const Rational& q) {
  const BigInt num = boost::multiprecision::numerator(q);
  const BigInt den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

}  // namespace spingeom
