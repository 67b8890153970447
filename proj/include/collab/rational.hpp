#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace collab {

/// Arbitrary-precision rational; exact orbits never overflow.
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Largest integer not exceeding r.
inline Rational floor(const Rational& r) {
  using boost::multiprecision::cpp_int;
  cpp_int n = boost::multiprecision::numerator(r);
  cpp_int d = boost::multiprecision::denominator(r);
  cpp_int q = n / d;  // truncates toward zero
  if (n < 0 && q * d != n) q -= 1;
  return Rational(q);
}

/// Reduction into [0,1).
inline Rational frac(const Rational& r) { return r - floor(r); }

/// Parses "p/q", "p" or a decimal literal such as "0.0025" exactly.
std::optional<Rational> parse_rational(const std::string& text);

/// Best rational approximation of x with denominator <= max_den, accepted only
/// if it reproduces x to within tol. Used to recover exact centers and zone
/// endpoints from configuration doubles like 0.25 or 0.4975.
std::optional<Rational> rational_from_double(double x, long long max_den = 1000000,
                                             double tol = 1e-15);

std::string to_string(const Rational& r);

}  // namespace collab
