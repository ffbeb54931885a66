#pragma once
// Exact-or-floating scalar used for every probability and expectation.

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <compare>
#include <cstring>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace bellbox {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Tolerance used for normalization checks on floating values.
inline constexpr double kFloatTolerance = 1e-12;

/// A number carried either as a reduced rational or as a double. The
/// representation tag is explicit; any arithmetic touching a floating operand
/// produces a floating result.
class Number {
public:
  Number() : value_(Rational(0)) {}
  Number(int v) : value_(Rational(v)) {}
  Number(long long v) : value_(Rational(v)) {}
  Number(Rational r) : value_(std::move(r)) {}
  Number(const BigInt &num, const BigInt &den) : value_(Rational(num, den)) {
    if (den == 0)
      throw std::domain_error("zero denominator");
  }
  static Number rational(long long num, long long den) {
    return Number(BigInt(num), BigInt(den));
  }
  static Number floating(double v) {
    Number n;
    n.value_ = v;
    return n;
  }

  bool is_exact() const { return std::holds_alternative<Rational>(value_); }
  bool is_floating() const { return !is_exact(); }

  const Rational &exact() const {
    if (!is_exact())
      throw std::logic_error("Number::exact on floating value");
    return std::get<Rational>(value_);
  }

  double to_double() const {
    if (is_exact())
      return std::get<Rational>(value_).convert_to<double>();
    return std::get<double>(value_);
  }

  /// Numerator / denominator in canonical reduced form (exact only).
  BigInt numerator() const { return boost::multiprecision::numerator(exact()); }
  BigInt denominator() const {
    return boost::multiprecision::denominator(exact());
  }

  bool is_zero() const {
    return is_exact() ? exact() == 0 : std::get<double>(value_) == 0.0;
  }
  int sign() const {
    if (is_exact())
      return exact().sign();
    const double d = std::get<double>(value_);
    return (d > 0) - (d < 0);
  }

  Number abs() const {
    if (is_exact())
      return Number(boost::multiprecision::abs(exact()));
    return floating(std::fabs(std::get<double>(value_)));
  }

  Number operator-() const {
    if (is_exact())
      return Number(Rational(-exact()));
    return floating(-std::get<double>(value_));
  }

  friend Number operator+(const Number &a, const Number &b) {
    if (a.is_exact() && b.is_exact())
      return Number(Rational(a.exact() + b.exact()));
    return floating(a.to_double() + b.to_double());
  }
  friend Number operator-(const Number &a, const Number &b) {
    if (a.is_exact() && b.is_exact())
      return Number(Rational(a.exact() - b.exact()));
    return floating(a.to_double() - b.to_double());
  }
  friend Number operator*(const Number &a, const Number &b) {
    if (a.is_exact() && b.is_exact())
      return Number(Rational(a.exact() * b.exact()));
    return floating(a.to_double() * b.to_double());
  }
  friend Number operator/(const Number &a, const Number &b) {
    if (b.is_zero())
      throw std::domain_error("division by zero");
    if (a.is_exact() && b.is_exact())
      return Number(Rational(a.exact() / b.exact()));
    return floating(a.to_double() / b.to_double());
  }
  Number &operator+=(const Number &o) { return *this = *this + o; }
  Number &operator-=(const Number &o) { return *this = *this - o; }
  Number &operator*=(const Number &o) { return *this = *this * o; }

  /// Value comparison; exact pairs compare exactly, anything else as doubles.
  friend std::partial_ordering operator<=>(const Number &a, const Number &b) {
    if (a.is_exact() && b.is_exact()) {
      const int c = a.exact().compare(b.exact());
      return c < 0 ? std::partial_ordering::less
             : c > 0 ? std::partial_ordering::greater
                     : std::partial_ordering::equivalent;
    }
    return a.to_double() <=> b.to_double();
  }
  friend bool operator==(const Number &a, const Number &b) {
    return (a <=> b) == std::partial_ordering::equivalent;
  }

  /// Representation-and-value identity: an exact 1/2 is not identical to a
  /// floating 0.5.
  bool identical(const Number &o) const {
    if (is_exact() != o.is_exact())
      return false;
    if (is_exact())
      return exact() == o.exact();
    // bitwise for doubles, so -0.0 and 0.0 differ and NaN equals itself
    const double x = std::get<double>(value_), y = std::get<double>(o.value_);
    return std::memcmp(&x, &y, sizeof x) == 0;
  }

  /// `p/q` for exact values (`p` when q = 1); floating values with
  /// `digits` significant digits.
  std::string str(int digits = 12) const {
    if (is_exact()) {
      const BigInt n = numerator(), d = denominator();
      return d == 1 ? n.str() : n.str() + "/" + d.str();
    }
    return format_double(std::get<double>(value_), digits);
  }

  /// Decimal rendering regardless of representation (used by `--decimal`).
  std::string decimal_str(int digits = 12) const {
    return format_double(to_double(), digits);
  }

  /// Shortest representation that round-trips through from_chars.
  static std::string shortest_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  static std::string format_double(double v, int digits) {
    if (v == 0.0)
      v = 0.0; // drop the sign of negative zero
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v,
                             std::chars_format::general, digits);
    return std::string(buf, res.ptr);
  }

  friend std::ostream &operator<<(std::ostream &os, const Number &n) {
    return os << n.str();
  }

private:
  std::variant<Rational, double> value_;
};

using Prob = Number;

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents plus the best semiconvergent).
inline Rational best_rational(double x, std::int64_t max_den) {
  if (!std::isfinite(x))
    throw std::domain_error("best_rational: non-finite input");
  const bool neg = x < 0;
  if (neg)
    x = -x;
  // Exact binary expansion of x, so the expansion is done on the true value.
  int exp2 = 0;
  const double mant = std::frexp(x, &exp2);
  const auto mant_int = static_cast<std::int64_t>(std::ldexp(mant, 53));
  Rational target(mant_int);
  if (exp2 - 53 >= 0)
    target *= Rational(BigInt(1) << (exp2 - 53));
  else
    target /= Rational(BigInt(1) << (53 - exp2));

  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  Rational rem = target;
  while (true) {
    const BigInt num = boost::multiprecision::numerator(rem);
    const BigInt den = boost::multiprecision::denominator(rem);
    const BigInt a = num / den;
    const BigInt q2 = a * q1 + q0;
    if (q2 > max_den) {
      // semiconvergent p0 + k p1 / q0 + k q1 with the largest admissible k
      const BigInt k = (BigInt(max_den) - q0) / q1;
      const Rational semi(p0 + k * p1, q0 + k * q1);
      const Rational conv(p1, q1);
      Rational best = conv;
      if (k > 0 && boost::multiprecision::abs(semi - target) <
                        boost::multiprecision::abs(conv - target))
        best = semi;
      return neg ? Rational(-best) : best;
    }
    const BigInt p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const Rational frac = rem - Rational(a);
    if (frac == 0)
      break;
    rem = 1 / frac;
  }
  const Rational best(p1, q1);
  return neg ? Rational(-best) : best;
}

} // namespace bellbox
