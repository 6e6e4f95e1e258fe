#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wallcross {

// Complex number with exact rational real/imaginary parts. Used as the
// coefficient field for exact-mode series; mirrors std::complex<double>
// closely enough that series code can be written once against either.
struct RatComplex {
  mpq_class re{0};
  mpq_class im{0};

  RatComplex() = default;
  RatComplex(int v) : re(v) {}  // NOLINT: implicit on purpose (0/1 literals)
  RatComplex(mpq_class r) : re(std::move(r)) {}
  RatComplex(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

  friend RatComplex operator+(const RatComplex& a, const RatComplex& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend RatComplex operator-(const RatComplex& a, const RatComplex& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend RatComplex operator*(const RatComplex& a, const RatComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  RatComplex operator-() const { return {-re, -im}; }
  RatComplex& operator+=(const RatComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  RatComplex& operator-=(const RatComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  RatComplex& operator*=(const RatComplex& o) { return *this = *this * o; }
  friend RatComplex operator/(const RatComplex& a, const RatComplex& b) {
    mpq_class n = b.re * b.re + b.im * b.im;
    if (n == 0) throw std::domain_error("RatComplex: division by zero");
    return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
  }
  friend bool operator==(const RatComplex& a, const RatComplex& b) {
    return a.re == b.re && a.im == b.im;
  }
  friend bool operator!=(const RatComplex& a, const RatComplex& b) { return !(a == b); }

  bool is_zero() const { return re == 0 && im == 0; }
  std::complex<double> to_complex() const { return {re.get_d(), im.get_d()}; }
  double abs_upper() const {  // cheap norm proxy for reports
    return std::abs(re.get_d()) + std::abs(im.get_d());
  }
};

// Parse "p/q" or "p" (optional sign) into an exact rational.
inline mpq_class parse_rational(const std::string& s) {
  mpq_class q;
  if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  q.canonicalize();
  return q;
}

inline std::string rational_to_string(const mpq_class& q) { return q.get_str(); }

// Convert an exact rational into the requested scalar field.
template <class R>
R rat_to(const mpq_class& q);
template <>
inline double rat_to<double>(const mpq_class& q) {
  return q.get_d();
}
template <>
inline mpq_class rat_to<mpq_class>(const mpq_class& q) {
  return q;
}

// Traits used by the templated series code.
template <class C>
struct coeff_traits;

template <>
struct coeff_traits<double> {
  static bool is_zero(double c) { return c == 0.0; }
  static double abs_value(double c) { return std::abs(c); }
  static double from_rational(const mpq_class& q) { return q.get_d(); }
  static constexpr bool exact = false;
};

template <>
struct coeff_traits<mpq_class> {
  static bool is_zero(const mpq_class& c) { return c == 0; }
  static double abs_value(const mpq_class& c) { return std::abs(c.get_d()); }
  static mpq_class from_rational(const mpq_class& q) { return q; }
  static constexpr bool exact = true;
};

template <>
struct coeff_traits<RatComplex> {
  static bool is_zero(const RatComplex& c) { return c.is_zero(); }
  static double abs_value(const RatComplex& c) {
    return std::abs(std::complex<double>(c.to_complex()));
  }
  static RatComplex from_rational(const mpq_class& q) { return RatComplex(q); }
  static constexpr bool exact = true;
};

template <>
struct coeff_traits<std::complex<double>> {
  static bool is_zero(const std::complex<double>& c) {
    return c.real() == 0.0 && c.imag() == 0.0;
  }
  static double abs_value(const std::complex<double>& c) { return std::abs(c); }
  static std::complex<double> from_rational(const mpq_class& q) {
    return {q.get_d(), 0.0};
  }
  static constexpr bool exact = false;
};

}  // namespace wallcross
