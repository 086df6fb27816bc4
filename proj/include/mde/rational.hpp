#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "mde/errors.hpp"

namespace mde {

// Positive rational number used for fractional orders (alpha = num/den).
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  constexpr double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

  friend constexpr bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num * b.den == b.num * a.den;
  }
};

inline Rational make_rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw invalid_input("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return {num / (g == 0 ? 1 : g), den / (g == 0 ? 1 : g)};
}

// Best rational approximation with denominator at most max_den (continued fractions).
inline Rational rational_from_double(double x, std::int64_t max_den = 1000) {
  if (!std::isfinite(x)) throw invalid_input("non-finite value cannot be converted to a rational");
  const bool neg = x < 0;
  double r = std::fabs(x);
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t q2 = q0 + ai * q1;
    if (q2 > max_den) break;
    const std::int64_t p2 = p0 + ai * p1;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = r - a;
    if (frac < 1e-12) break;
    r = 1.0 / frac;
  }
  return make_rational(neg ? -p1 : p1, q1);
}

// Accepts "a/b", "a" or a decimal literal such as "0.5".
inline Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw invalid_input("malformed rational '" + std::string(text) + "'");
    return v;
  };
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return make_rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  if (text.find_first_of(".eE") == std::string_view::npos) return make_rational(parse_int(text), 1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw invalid_input("malformed rational '" + std::string(text) + "'");
  return rational_from_double(v);
}

}  // namespace mde
