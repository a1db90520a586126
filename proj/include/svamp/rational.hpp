#pragma once

// Exact rational helpers on top of GMP's C++ interface.

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace svamp {

using Rational = mpq_class;

/// Parses "3/4", "-2", "0.05", "1e-3" or "2.5E+2" into an exact rational.
/// Decimal notation is read exactly, so "0.1" is 1/10 and not the nearest double.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  if (s.find('/') != std::string::npos) {
    Rational q;
    if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + s);
    q.canonicalize();
    if (q.get_den() == 0) throw std::invalid_argument("zero denominator: " + s);
    return q;
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    try {
      exponent = std::stol(s.substr(e + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad exponent in literal: " + s);
    }
    s.resize(e);
  }
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false;
  for (char ch : s) {
    if (ch == '.') {
      if (seen_point) throw std::invalid_argument("bad decimal literal: " + std::string(text));
      seen_point = true;
    } else if (ch >= '0' && ch <= '9') {
      digits.push_back(ch);
      if (seen_point) ++frac_digits;
    } else {
      throw std::invalid_argument("bad decimal literal: " + std::string(text));
    }
  }
  if (digits.empty()) throw std::invalid_argument("bad decimal literal: " + std::string(text));
  mpz_class num(digits, 10);
  const long shift = exponent - frac_digits;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  Rational q = shift < 0 ? Rational(num, scale) : Rational(num * scale, 1);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

/// num/den in lowest terms. mpq_class(num, den) does not canonicalize, and
/// comparisons of non-canonical values are wrong.
inline Rational ratio(long num, long den) {
  if (den == 0) throw std::invalid_argument("ratio: zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

/// Exact binary value of a finite double.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite double has no rational value");
  Rational q;
  q = x;
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(10); }

inline double to_double(const Rational& q) { return q.get_d(); }

inline Rational rational_pow(const Rational& base, unsigned exponent) {
  Rational r = 1;
  for (unsigned i = 0; i < exponent; ++i) r *= base;
  return r;
}

}  // namespace svamp
