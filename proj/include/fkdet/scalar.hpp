#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <string_view>

#include "fkdet/errors.hpp"

namespace fkdet {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using Complex = std::complex<double>;

enum class ScalarDomain { exact_integer, exact_rational, complex_float };

inline std::string_view to_string(ScalarDomain d) {
  switch (d) {
    case ScalarDomain::exact_integer: return "exact-integer";
    case ScalarDomain::exact_rational: return "exact-rational";
    case ScalarDomain::complex_float: return "complex-float";
  }
  return "?";
}

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<Integer> {
  static constexpr ScalarDomain domain = ScalarDomain::exact_integer;
  static constexpr bool exact = true;
  /// Type of |x| and of l1 norms.
  using Magnitude = Integer;
  static bool is_zero(const Integer& x) { return x.is_zero(); }
  static Integer conj(const Integer& x) { return x; }
  static Integer abs(const Integer& x) { return boost::multiprecision::abs(x); }
  static double to_double(const Integer& x) { return x.convert_to<double>(); }
  static Complex to_complex(const Integer& x) { return {to_double(x), 0.0}; }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr ScalarDomain domain = ScalarDomain::exact_rational;
  static constexpr bool exact = true;
  using Magnitude = Rational;
  static bool is_zero(const Rational& x) { return x.is_zero(); }
  static Rational conj(const Rational& x) { return x; }
  static Rational abs(const Rational& x) { return boost::multiprecision::abs(x); }
  static double to_double(const Rational& x) { return x.convert_to<double>(); }
  static Complex to_complex(const Rational& x) { return {to_double(x), 0.0}; }
};

template <>
struct ScalarTraits<Complex> {
  static constexpr ScalarDomain domain = ScalarDomain::complex_float;
  static constexpr bool exact = false;
  using Magnitude = double;
  static bool is_zero(const Complex& x) { return x.real() == 0.0 && x.imag() == 0.0; }
  static Complex conj(const Complex& x) { return std::conj(x); }
  static double abs(const Complex& x) { return std::abs(x); }
  static double to_double(const Complex& x) { return x.real(); }
  static Complex to_complex(const Complex& x) { return x; }
};

template <class S>
concept RingScalar = requires { ScalarTraits<S>::domain; };

template <class S>
concept ExactScalar = RingScalar<S> && ScalarTraits<S>::exact;

template <class S>
inline constexpr ScalarDomain scalar_domain_v = ScalarTraits<S>::domain;

template <class T>
double magnitude_to_double(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    return x.template convert_to<double>();
  }
}

/// Largest double not exceeding the exact value (used for rigorous lower bounds).
inline double round_down(const Rational& x) {
  double d = x.convert_to<double>();
  if (Rational(d) > x) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
  return d;
}

inline double round_up(const Rational& x) {
  double d = x.convert_to<double>();
  if (Rational(d) < x) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

/// Text form used by the `.gre` format: integers as-is, rationals as `p/q`.
inline std::string format_scalar(const Integer& x) { return x.str(); }

inline std::string format_scalar(const Rational& x) {
  const Integer num = boost::multiprecision::numerator(x);
  const Integer den = boost::multiprecision::denominator(x);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline std::string format_scalar(const Complex& x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", x.real(), x.imag());
  return buf;
}

/// Parses `[-]digits` or `[-]digits/digits`; throws DomainError on anything else.
inline Rational parse_rational(std::string_view text) {
  const auto is_int = [](std::string_view s) {
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  const auto to_int = [](std::string_view s) {
    bool neg = false;
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);  // a leading 0 would read as octal
    Integer v(std::string{s});
    return neg ? Integer(-v) : v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    if (!is_int(text)) throw DomainError("not an integer: '" + std::string(text) + "'");
    return Rational(to_int(text));
  }
  const auto num = text.substr(0, slash);
  const auto den = text.substr(slash + 1);
  if (!is_int(num) || !is_int(den) || den.front() == '-' || den.front() == '+')
    throw DomainError("not a rational p/q: '" + std::string(text) + "'");
  const Integer d = to_int(den);
  if (d == 0) throw DomainError("zero denominator: '" + std::string(text) + "'");
  return Rational(to_int(num), d);
}

/// `%.12g` formatting used for every reported float.
inline std::string format_value(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace fkdet
