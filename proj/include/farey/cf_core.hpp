#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"

namespace farey {

// A pair (p, q); q == 0 only for the formal convergent 1/0.
struct Convergent {
  BigInt p;
  BigInt q;

  bool infinite() const { return sgn(q) == 0; }
  Rational value() const {
    if (infinite()) throw DomainError("formal convergent 1/0 has no rational value");
    return Rational(p, q);
  }
  std::string to_string() const { return p.get_str() + "/" + q.get_str(); }
  friend bool operator==(const Convergent& a, const Convergent& b) { return a.p == b.p && a.q == b.q; }
};

// [a0; a1, a2, ...]. Three shapes:
//   terminated     - finite expansion of a rational, digits beyond the end do not exist
//   prefix         - first `digits.size()` digits of some real, later queries throw BudgetExhausted
//   periodic       - prefix followed by `period` repeated forever (quadratic irrationals)
struct RcfExpansion {
  BigInt integer_part{0};
  std::vector<BigInt> digits;
  std::vector<BigInt> period;
  bool terminated = true;

  static RcfExpansion finite(BigInt a0, std::vector<BigInt> ds) {
    RcfExpansion e;
    e.integer_part = std::move(a0);
    e.digits = std::move(ds);
    e.terminated = true;
    e.check();
    return e;
  }
  static RcfExpansion prefix(BigInt a0, std::vector<BigInt> ds) {
    RcfExpansion e;
    e.integer_part = std::move(a0);
    e.digits = std::move(ds);
    e.terminated = false;
    e.check();
    return e;
  }
  static RcfExpansion periodic(BigInt a0, std::vector<BigInt> pre, std::vector<BigInt> per) {
    if (per.empty()) throw InvalidDigits("empty period");
    RcfExpansion e;
    e.integer_part = std::move(a0);
    e.digits = std::move(pre);
    e.period = std::move(per);
    e.terminated = false;
    e.check();
    return e;
  }

  bool is_periodic() const { return !period.empty(); }
  bool is_exact() const { return terminated; }

  // number of digits that can be queried; max() for periodic expansions
  std::size_t budget() const {
    return is_periodic() ? std::numeric_limits<std::size_t>::max() : digits.size();
  }
  std::size_t depth() const {
    if (!terminated) throw DomainError("depth of a non-terminated expansion");
    return digits.size();
  }

  // a_k for k >= 1; nullopt when the expansion has terminated before k
  std::optional<BigInt> digit_or_end(std::size_t k) const {
    if (k == 0) return integer_part;
    if (k <= digits.size()) return digits[k - 1];
    if (is_periodic()) return period[(k - 1 - digits.size()) % period.size()];
    if (terminated) return std::nullopt;
    throw BudgetExhausted(k);
  }

  const BigInt& digit(std::size_t k) const {
    if (k == 0) return integer_part;
    if (k <= digits.size()) return digits[k - 1];
    if (is_periodic()) return period[(k - 1 - digits.size()) % period.size()];
    if (terminated) throw DomainError("expansion terminated before a_" + std::to_string(k));
    throw BudgetExhausted(k);
  }

  bool has_digit(std::size_t k) const {
    return k == 0 || k <= digits.size() || is_periodic();
  }

  Rational value() const;

  std::string to_string() const {
    std::string s = "[" + integer_part.get_str();
    for (std::size_t i = 0; i < digits.size(); ++i) s += (i == 0 ? "; " : ", ") + digits[i].get_str();
    if (is_periodic()) {
      s += digits.empty() ? "; (" : ", (";
      for (std::size_t i = 0; i < period.size(); ++i) s += (i ? ", " : "") + period[i].get_str();
      s += ")";
    }
    if (!terminated && !is_periodic()) s += ", ...";
    return s + "]";
  }

 private:
  void check() const {
    for (const auto& d : digits)
      if (d < 1) throw InvalidDigits("partial quotient < 1");
    for (const auto& d : period)
      if (d < 1) throw InvalidDigits("partial quotient < 1");
    if (terminated && !digits.empty() && digits.back() < 2)
      throw InvalidDigits("terminated expansion must end with a digit >= 2");
  }
};

inline std::vector<BigInt> to_digits(std::initializer_list<unsigned long> xs) {
  std::vector<BigInt> out;
  out.reserve(xs.size());
  for (auto v : xs) out.emplace_back(v);
  return out;
}

inline RcfExpansion rcf_expand(const Rational& x) {
  RcfExpansion e;
  e.terminated = true;
  BigInt n = x.num(), d = x.den();
  BigInt q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
  e.integer_part = q;
  n = d;
  d = r;
  while (sgn(d) != 0) {
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    e.digits.push_back(q);
    n.swap(d);
    d.swap(r);
  }
  return e;
}

// (p_k, q_k) for k = -1 .. n, i.e. n + 2 entries
inline std::vector<Convergent> rcf_convergents(const RcfExpansion& e, std::size_t n) {
  std::vector<Convergent> out;
  out.reserve(n + 2);
  out.push_back({BigInt(1), BigInt(0)});
  out.push_back({e.integer_part, BigInt(1)});
  for (std::size_t k = 1; k <= n; ++k) {
    const BigInt& a = e.digit(k);
    const auto& c1 = out[out.size() - 1];
    const auto& c0 = out[out.size() - 2];
    Convergent next{a * c1.p + c0.p, a * c1.q + c0.q};
    out.push_back(std::move(next));
  }
  return out;
}

inline Rational RcfExpansion::value() const {
  if (!terminated) throw DomainError("value of a non-terminated expansion");
  auto cs = rcf_convergents(*this, digits.size());
  return cs.back().value();
}

// Second form [a0; a1, ..., an - 1, 1] of a terminated expansion, with the depth n of the input.
inline std::pair<RcfExpansion, std::size_t> alternate_expansion(const RcfExpansion& e) {
  if (!e.terminated) throw DomainError("alternate expansion needs a terminated expansion");
  RcfExpansion alt;
  alt.terminated = true;
  alt.integer_part = e.integer_part;
  alt.digits = e.digits;
  if (alt.digits.empty()) {
    alt.integer_part -= 1;
  } else {
    alt.digits.back() -= 1;
  }
  alt.digits.emplace_back(1);
  // built directly: the alternate form legitimately ends in 1
  return {std::move(alt), e.digits.size()};
}

inline std::pair<BigInt, Rational> gauss_step(const Rational& x) {
  if (x.sign() <= 0 || x > Rational(1)) throw DomainError("gauss_step needs 0 < x <= 1");
  Rational inv = x.inverse();
  BigInt a = inv.floor();
  return {a, inv - Rational(a, BigInt(1))};
}

struct SrcfPair {
  int alpha;  // +1 or -1
  BigInt beta;
};

struct SrcfDigits {
  BigInt beta0{0};
  std::vector<SrcfPair> pairs;  // (alpha_n, beta_n), n >= 1

  void validate() const {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (pairs[i].alpha != 1 && pairs[i].alpha != -1) throw InvalidDigits("alpha must be +1 or -1");
      if (pairs[i].beta < 1) throw InvalidDigits("beta_n must be >= 1");
      // alpha_{n+1} + beta_n >= 1 for n >= 1
      if (i + 1 < pairs.size() && pairs[i + 1].alpha + pairs[i].beta < 1)
        throw InvalidDigits("invalid digit pair at n=" + std::to_string(i + 1));
    }
  }
};

// (P_k, Q_k) for k = -1 .. n
inline std::vector<Convergent> srcf_convergents(const SrcfDigits& d, std::size_t n) {
  d.validate();
  if (n > d.pairs.size()) throw BudgetExhausted(n);
  std::vector<Convergent> out;
  out.reserve(n + 2);
  out.push_back({BigInt(1), BigInt(0)});
  out.push_back({d.beta0, BigInt(1)});
  for (std::size_t k = 1; k <= n; ++k) {
    const auto& pr = d.pairs[k - 1];
    const auto& c1 = out[out.size() - 1];
    const auto& c0 = out[out.size() - 2];
    Convergent next{pr.beta * c1.p + pr.alpha * c0.p, pr.beta * c1.q + pr.alpha * c0.q};
    if (sgn(next.q) < 0) {
      next.p = -next.p;
      next.q = -next.q;
    }
    out.push_back(std::move(next));
  }
  return out;
}

struct FareyDigit {
  int b;  // b_n = 2 - eps_{n+1}
  int e;  // e_{n+1} = 2 eps_{n+1} - 1
  friend bool operator==(const FareyDigit&, const FareyDigit&) = default;
};

// (b_n, e_{n+1}) for n = 0 .. m-1 from m bits
inline std::vector<FareyDigit> farey_digit_pairs(const std::vector<int>& bits) {
  std::vector<FareyDigit> out;
  out.reserve(bits.size());
  for (int eps : bits) {
    if (eps != 0 && eps != 1) throw InvalidDigits("epsilon bits must be 0 or 1");
    out.push_back({2 - eps, 2 * eps - 1});
  }
  return out;
}

// SRCF digits [b0 - 1; e1/b1, e2/b2, ...]; m bits give pairs n = 1 .. m-1
inline SrcfDigits farey_expansion_digits(const std::vector<int>& bits) {
  auto fd = farey_digit_pairs(bits);
  SrcfDigits d;
  if (fd.empty()) return d;
  d.beta0 = fd[0].b - 1;
  for (std::size_t n = 1; n < fd.size(); ++n) d.pairs.push_back({fd[n - 1].e, BigInt(fd[n].b)});
  return d;
}

}  // namespace farey
