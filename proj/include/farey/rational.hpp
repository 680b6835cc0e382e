#pragma once

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "errors.hpp"

namespace farey {

using BigInt = mpz_class;

inline BigInt big(std::uint64_t v) {
  BigInt r;
  mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return r;
}

inline bool fits_u64(const BigInt& v) {
  return sgn(v) >= 0 && mpz_sizeinbase(v.get_mpz_t(), 2) <= 64;
}

inline std::uint64_t to_u64(const BigInt& v) {
  if (!fits_u64(v)) throw DomainError("integer does not fit in 64 bits");
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, 1, sizeof(out), 0, 0, v.get_mpz_t());
  return out;
}

// n/d as a double without overflow for huge operands.
inline double ratio_to_double(const BigInt& n, const BigInt& d) {
  if (sgn(n) == 0) return 0.0;
  long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, n.get_mpz_t());
  double md = mpz_get_d_2exp(&ed, d.get_mpz_t());
  return std::ldexp(mn / md, static_cast<int>(en - ed));
}

// natural log of a positive big integer
inline double log_big(const BigInt& v) {
  if (sgn(v) <= 0) throw DomainError("log of non-positive integer");
  long e = 0;
  double m = mpz_get_d_2exp(&e, v.get_mpz_t());
  return std::log(m) + static_cast<double>(e) * std::log(2.0);
}

class Rational {
 public:
  Rational() = default;
  Rational(long v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  Rational(const BigInt& num, const BigInt& den) {
    if (sgn(den) == 0) throw DomainError("zero denominator");
    v_.get_num() = num;
    v_.get_den() = den;
    v_.canonicalize();
  }
  explicit Rational(const mpq_class& q) : v_(q) { v_.canonicalize(); }

  // caller guarantees gcd(num, den) = 1 and den > 0
  static Rational from_reduced(const BigInt& num, const BigInt& den) {
    Rational r;
    r.v_.get_num() = num;
    r.v_.get_den() = den;
    return r;
  }

  // exact binary value of a finite double
  static Rational from_double(double d) {
    if (!std::isfinite(d)) throw DomainError("non-finite double");
    return Rational(mpq_class(d));
  }

  // "p/q", "p", or a decimal like "0.25"
  static Rational parse(std::string_view s) {
    std::string t(s);
    auto slash = t.find('/');
    try {
      if (slash != std::string::npos) {
        BigInt p(t.substr(0, slash)), q(t.substr(slash + 1));
        return Rational(p, q);
      }
      auto dot = t.find('.');
      if (dot != std::string::npos) {
        std::string frac = t.substr(dot + 1);
        std::string whole = t.substr(0, dot);
        bool neg = !whole.empty() && whole[0] == '-';
        if (whole.empty() || whole == "-" || whole == "+") whole += "0";
        BigInt w(whole);
        BigInt f = frac.empty() ? BigInt(0) : BigInt(frac);
        BigInt scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
        BigInt num = abs(w) * scale + f;
        if (neg) num = -num;
        return Rational(num, scale);
      }
      return Rational(BigInt(t), BigInt(1));
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed rational '" + t + "'", 0);
    }
  }

  const BigInt& num() const { return v_.get_num(); }
  const BigInt& den() const { return v_.get_den(); }
  const mpq_class& mpq() const { return v_; }

  bool is_zero() const { return sgn(v_) == 0; }
  int sign() const { return sgn(v_); }

  BigInt floor() const {
    BigInt f;
    mpz_fdiv_q(f.get_mpz_t(), num().get_mpz_t(), den().get_mpz_t());
    return f;
  }

  double to_double() const { return ratio_to_double(num(), den()); }

  std::string to_string() const {
    if (den() == 1) return num().get_str();
    return num().get_str() + "/" + den().get_str();
  }

  Rational inverse() const {
    if (is_zero()) throw DomainError("inverse of zero");
    Rational r;
    mpq_inv(r.v_.get_mpq_t(), v_.get_mpq_t());
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) { return Rational::wrap(a.v_ + b.v_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return Rational::wrap(a.v_ - b.v_); }
  friend Rational operator*(const Rational& a, const Rational& b) { return Rational::wrap(a.v_ * b.v_); }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.is_zero()) throw DomainError("division by zero");
    return Rational::wrap(a.v_ / b.v_);
  }
  Rational operator-() const { return Rational::wrap(-v_); }
  Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
  Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
  Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

  friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int c = cmp(a.v_, b.v_);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

 private:
  static Rational wrap(const mpq_class& q) {
    Rational r;
    r.v_ = q;  // gmpxx results are already canonical
    return r;
  }
  mpq_class v_;
};

inline Rational abs(const Rational& r) { return r.sign() < 0 ? -r : r; }

// Unreduced quotient num/den with den > 0. Used where canonicalizing huge
// operands would dominate the cost (orbit-point h values); compares exactly.
struct Ratio {
  BigInt num{0};
  BigInt den{1};

  Ratio() = default;
  Ratio(BigInt n, BigInt d) : num(std::move(n)), den(std::move(d)) {
    if (sgn(den) == 0) throw DomainError("zero denominator");
    if (sgn(den) < 0) {
      num = -num;
      den = -den;
    }
  }
  Ratio(const Rational& r) : num(r.num()), den(r.den()) {}  // NOLINT(google-explicit-constructor)

  double to_double() const { return ratio_to_double(num, den); }
  Rational reduced() const { return Rational(num, den); }
  int sign() const { return sgn(num); }

  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
    int c = cmp(a.num * b.den, b.num * a.den);
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }
  friend bool operator==(const Ratio& a, const Ratio& b) { return a.num * b.den == b.num * a.den; }
};

// compare a/b against a double threshold exactly (the double is an exact binary rational)
inline int compare(const Ratio& r, double z) {
  mpq_class q(z);
  BigInt lhs = r.num * q.get_den();
  BigInt rhs = q.get_num() * r.den;
  return cmp(lhs, rhs) < 0 ? -1 : (lhs == rhs ? 0 : 1);
}

// Closed rational interval; degenerate when exact.
struct Enclosure {
  Ratio lo;
  Ratio hi;

  Enclosure() = default;
  explicit Enclosure(const Ratio& v) : lo(v), hi(v) {}
  Enclosure(Ratio a, Ratio b) : lo(std::move(a)), hi(std::move(b)) {
    if (hi < lo) std::swap(lo, hi);
  }
  // caller guarantees a <= b
  static Enclosure ordered(Ratio a, Ratio b) {
    Enclosure e;
    e.lo = std::move(a);
    e.hi = std::move(b);
    return e;
  }

  bool exact() const { return lo == hi; }
  double mid() const { return 0.5 * (lo.to_double() + hi.to_double()); }
  double width() const { return hi.to_double() - lo.to_double(); }
  bool certainly_below(const Ratio& c) const { return hi < c; }
  bool certainly_at_least(const Ratio& c) const { return !(lo < c); }
  bool certainly_above(const Ratio& c) const { return c < lo; }
  bool certainly_at_most(const Ratio& c) const { return !(c < hi); }
  bool contains(const Ratio& v) const { return !(v < lo) && !(hi < v); }
};

}  // namespace farey
