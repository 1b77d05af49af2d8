#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace emrm {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Base of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A size guard (k, N, Σ sizes, ...) was exceeded.
class GuardError : public Error {
 public:
  using Error::Error;
};

// A moment table lacks an entry a computation needs.
class TableTooShortError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  if (den == 0) throw InvalidArgumentError("rational with zero denominator");
  return Rational(Integer(num), Integer(den));
}

inline Integer numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Integer denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

inline std::string to_string(const Integer& i) { return i.str(); }

// "p" for integers, "p/q" otherwise.
inline std::string to_string(const Rational& r) {
  const Integer den = denominator_of(r);
  if (den == 1) return numerator_of(r).str();
  return numerator_of(r).str() + "/" + den.str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational pow(const Rational& base, int exponent) {
  if (exponent < 0) {
    if (base == 0) throw InvalidArgumentError("negative power of zero");
    return pow(Rational(1) / base, -exponent);
  }
  Rational result{1};
  Rational b = base;
  for (int e = exponent; e > 0; e >>= 1) {
    if (e & 1) result *= b;
    b *= b;
  }
  return result;
}

inline Integer factorial(int n) {
  if (n < 0) throw InvalidArgumentError("factorial of a negative integer");
  Integer r{1};
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline Integer binomial(int n, int k) {
  if (k < 0 || k > n) return Integer{0};
  Integer r{1};
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

// n (n-1) ... (n-count+1); zero when count > n.
inline Integer falling_factorial(const Integer& n, int count) {
  Integer r{1};
  for (int i = 0; i < count; ++i) {
    const Integer f = n - i;
    if (f <= 0) return Integer{0};
    r *= f;
  }
  return r;
}

// Exact element of Q(sqrt(radicand)): rational_part + surd_part * sqrt(radicand).
//
// Finite-N moments of entries scaled by 1/sqrt(N) carry half-integer powers
// of N; every such quantity lives in this field for a fixed N.
class SurdValue {
 public:
  SurdValue() = default;
  SurdValue(Rational rational_part)  // NOLINT(google-explicit-constructor)
      : rational_(std::move(rational_part)) {}
  SurdValue(Rational rational_part, Rational surd_part, Integer radicand)
      : rational_(std::move(rational_part)), surd_(std::move(surd_part)), radicand_(std::move(radicand)) {
    if (radicand_ <= 0) throw InvalidArgumentError("surd radicand must be positive");
    normalize();
  }

  // N^{half_power / 2} as an exact surd.
  static SurdValue sqrt_power(const Integer& n, int half_power) {
    if (n <= 0) throw InvalidArgumentError("sqrt_power needs a positive base");
    const int whole = half_power >= 0 ? half_power / 2 : -((-half_power + 1) / 2);
    const bool odd = (half_power - 2 * whole) != 0;
    const Rational base = pow(Rational(n), whole);
    if (!odd) return SurdValue(base);
    return SurdValue(Rational{0}, base, n);
  }

  const Rational& rational_part() const { return rational_; }
  const Rational& surd_part() const { return surd_; }
  const Integer& radicand() const { return radicand_; }
  bool is_rational() const { return surd_ == 0; }

  double to_double() const {
    return emrm::to_double(rational_) + emrm::to_double(surd_) * std::sqrt(radicand_.convert_to<double>());
  }

  SurdValue& operator+=(const SurdValue& o) {
    adopt_radicand(o);
    rational_ += o.rational_;
    surd_ += o.surd_;
    normalize();
    return *this;
  }
  SurdValue& operator-=(const SurdValue& o) {
    adopt_radicand(o);
    rational_ -= o.rational_;
    surd_ -= o.surd_;
    normalize();
    return *this;
  }
  SurdValue& operator*=(const SurdValue& o) {
    adopt_radicand(o);
    const Rational r = rational_ * o.rational_ + surd_ * o.surd_ * Rational(radicand_);
    const Rational s = rational_ * o.surd_ + surd_ * o.rational_;
    rational_ = r;
    surd_ = s;
    normalize();
    return *this;
  }
  SurdValue& operator*=(const Rational& c) {
    rational_ *= c;
    surd_ *= c;
    normalize();
    return *this;
  }

  friend SurdValue operator+(SurdValue a, const SurdValue& b) { return a += b; }
  friend SurdValue operator-(SurdValue a, const SurdValue& b) { return a -= b; }
  friend SurdValue operator*(SurdValue a, const SurdValue& b) { return a *= b; }
  friend SurdValue operator*(SurdValue a, const Rational& c) { return a *= c; }
  friend SurdValue operator-(SurdValue a) {
    a.rational_ = -a.rational_;
    a.surd_ = -a.surd_;
    return a;
  }
  friend bool operator==(const SurdValue& a, const SurdValue& b) {
    if (a.surd_ != b.surd_) return false;
    if (a.surd_ != 0 && a.radicand_ != b.radicand_) return false;
    return a.rational_ == b.rational_;
  }

  std::string to_string() const {
    if (surd_ == 0) return emrm::to_string(rational_);
    return emrm::to_string(rational_) + " + " + emrm::to_string(surd_) + "*sqrt(" + radicand_.str() + ")";
  }

 private:
  void adopt_radicand(const SurdValue& o) {
    if (o.surd_ == 0) return;
    if (surd_ == 0) {
      radicand_ = o.radicand_;
      return;
    }
    if (radicand_ != o.radicand_) throw InvalidArgumentError("mixing surds with different radicands");
  }
  void normalize() {
    if (surd_ == 0) radicand_ = 1;
  }

  Rational rational_{0};
  Rational surd_{0};
  Integer radicand_{1};
};

}  // namespace emrm
