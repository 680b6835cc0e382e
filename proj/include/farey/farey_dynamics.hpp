#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cf_core.hpp"
#include "errors.hpp"
#include "rational.hpp"

namespace farey {

inline constexpr std::size_t kDefaultEnclosureDepth = 40;

inline Rational farey_step(const Rational& x) {
  if (x.sign() < 0 || x > Rational(1)) throw DomainError("farey_step needs x in [0,1]");
  Rational half(BigInt(1), BigInt(2));
  if (x <= half) return x / (Rational(1) - x);
  return (Rational(1) - x) / x;
}

// Entries of A_[0,n] = [[u, t], [s, r]] plus (n, j_n, lambda_n).
struct FareyState {
  std::uint64_t n = 0;
  std::uint64_t j = 0;
  std::uint64_t lambda = 0;
  BigInt u{1}, t{0}, s{0}, r{1};

  BigInt det() const { return u * r - t * s; }
  friend bool operator==(const FareyState& a, const FareyState& b) {
    return a.n == b.n && a.j == b.j && a.lambda == b.lambda && a.u == b.u && a.t == b.t && a.s == b.s &&
           a.r == b.r;
  }
};

// right-multiplication by A_eps = [[1-eps, eps], [1, 1]]
inline FareyState advance(const FareyState& st, int eps) {
  if (eps != 0 && eps != 1) throw DomainError("epsilon must be 0 or 1");
  FareyState o;
  o.n = st.n + 1;
  if (eps == 0) {
    o.u = st.u + st.t;
    o.t = st.t;
    o.s = st.s + st.r;
    o.r = st.r;
    o.j = st.j;
    o.lambda = st.lambda + 1;
  } else {
    o.u = st.t;
    o.t = st.u + st.t;
    o.s = st.r;
    o.r = st.s + st.r;
    o.j = st.j + 1;
    o.lambda = 0;
  }
  return o;
}

inline Convergent farey_convergent(const FareyState& st) { return {st.u, st.s}; }
inline Rational ito_convergent(const FareyState& st) { return Rational(st.u + st.t, st.s + st.r); }

// (x_n, y_n): x enclosed by a rational interval, y exact.
struct PointInOmega {
  Rational x_lo;
  Rational x_hi;
  Rational y;

  bool x_exact() const { return x_lo == x_hi; }
  static PointInOmega exact(const Rational& x, const Rational& y) { return {x, x, y}; }
  std::string to_string() const {
    if (x_exact()) return "(" + x_lo.to_string() + ", " + y.to_string() + ")";
    return "([" + x_lo.to_string() + ", " + x_hi.to_string() + "], " + y.to_string() + ")";
  }
};

inline std::pair<Rational, Rational> natural_extension_step(const Rational& x, const Rational& y) {
  Rational one(1);
  if (x.sign() < 0 || x > one || y.sign() < 0 || y > one) throw DomainError("point outside Omega");
  Rational half(BigInt(1), BigInt(2));
  if (x <= half) return {x / (one - x), y / (one + y)};
  return {(one - x) / x, (one + y).inverse()};
}

// Walks the Farey orbit of (x, 1) block by block. Inside block j the state is
// determined by the RCF convergents p_{j-1}/q_{j-1}, p_j/q_j and the offset lambda,
// so long blocks can be skipped in O(1) big-integer operations.
class OrbitWalker {
 public:
  explicit OrbitWalker(const RcfExpansion& e) {
    auto copy = std::make_shared<RcfExpansion>(e);
    if (copy->integer_part == 1 && copy->digits.empty() && copy->terminated) {
      // x = 1: walk the form [0; 1]
      copy->integer_part = 0;
      copy->digits.emplace_back(1);
    }
    if (copy->integer_part != 0) throw DomainError("orbit needs x in [0,1]");
    e_ = std::move(copy);
  }

  const RcfExpansion& expansion() const { return *e_; }
  std::uint64_t n() const { return n_; }
  std::uint64_t j() const { return j_; }
  std::uint64_t lambda() const { return lam_; }

  // a_{j+1}; nullopt once a terminated expansion has run out (x_n = 0 from here on)
  const std::optional<std::uint64_t>& block_digit() {
    load();
    return a_;
  }

  // p_{j-1}, p_j, q_{j-1}, q_j
  const BigInt& p_prev() const { return pm_; }
  const BigInt& p_cur() const { return pc_; }
  const BigInt& q_prev() const { return qm_; }
  const BigInt& q_cur() const { return qc_; }

  FareyState state() const {
    FareyState st;
    st.n = n_;
    st.j = j_;
    st.lambda = lam_;
    st.u = pc_ * lam_ + pm_;
    st.t = pc_;
    st.s = qc_ * lam_ + qm_;
    st.r = qc_;
    return st;
  }
  BigInt s() const { return qc_ * lam_ + qm_; }
  BigInt u() const { return pc_ * lam_ + pm_; }

  int next_bit() {
    load();
    return (a_ && lam_ + 1 == *a_) ? 1 : 0;
  }

  void step() {
    load();
    if (a_ && lam_ + 1 == *a_) {
      close_block();
    } else {
      ++lam_;
      ++n_;
    }
  }

  // move to offset lam within the current block (lam >= lambda(), lam < a_{j+1})
  void jump_to(std::uint64_t lam) {
    load();
    if (lam < lam_ || (a_ && lam >= *a_)) throw DomainError("jump outside the current block");
    n_ += lam - lam_;
    lam_ = lam;
  }

  // advance to offset 0 of the next block
  void next_block() {
    load();
    if (!a_) throw DomainError("final block of a terminated expansion is infinite");
    n_ += *a_ - 1 - lam_;
    lam_ = *a_ - 1;
    close_block();
  }

  // remaining raw steps before the next block starts; nullopt for an infinite block
  std::optional<std::uint64_t> steps_to_block_end() {
    load();
    if (!a_) return std::nullopt;
    return *a_ - lam_;
  }

  Rational y() const { return Rational::from_reduced(qc_, s() + qc_); }

  // x_n = [0; a_{j+1} - lambda, a_{j+2}, ...]; exact for terminated expansions,
  // otherwise enclosed by the last two convergents of the next `depth` tail digits
  PointInOmega point(std::size_t depth = kDefaultEnclosureDepth) {
    load();
    PointInOmega pt;
    pt.y = y();
    if (!a_) {
      pt.x_lo = pt.x_hi = Rational(0);
      return pt;
    }
    BigInt P0(0), Q0(1), Pm(1), Qm(0);  // P_0/Q_0 and P_{-1}/Q_{-1} of the tail
    std::size_t used = 0;
    const bool exact = e_->terminated;
    for (std::size_t k = 0; exact || k < depth; ++k) {
      BigInt c;
      if (k == 0) {
        c = big(*a_ - lam_);
      } else {
        std::size_t idx = static_cast<std::size_t>(j_) + 1 + k;
        if (e_->terminated) {
          if (idx > e_->digits.size()) {
            break;
          }
          c = e_->digits[idx - 1];
        } else {
          if (!e_->has_digit(idx)) break;
          c = e_->digit(idx);
        }
      }
      BigInt P1 = c * P0 + Pm, Q1 = c * Q0 + Qm;
      Pm.swap(P0);
      Qm.swap(Q0);
      P0.swap(P1);
      Q0.swap(Q1);
      ++used;
    }
    if (exact) {
      pt.x_lo = pt.x_hi = Rational::from_reduced(P0, Q0);
      return pt;
    }
    Rational a = Rational::from_reduced(P0, Q0), b = Rational::from_reduced(Pm, Qm);
    if (used == 0) throw BudgetExhausted(j_ + 1);
    if (a < b) {
      pt.x_lo = a;
      pt.x_hi = b;
    } else {
      pt.x_lo = b;
      pt.x_hi = a;
    }
    return pt;
  }

 private:
  void load() {
    if (loaded_) return;
    auto d = e_->digit_or_end(static_cast<std::size_t>(j_) + 1);
    if (d) {
      if (!fits_u64(*d)) throw DomainError("partial quotient too large to walk");
      a_ = to_u64(*d);
    } else {
      a_.reset();
    }
    loaded_ = true;
  }

  void close_block() {
    BigInt a = big(*a_);
    BigInt pn = a * pc_ + pm_, qn = a * qc_ + qm_;
    pm_.swap(pc_);
    qm_.swap(qc_);
    pc_.swap(pn);
    qc_.swap(qn);
    ++j_;
    lam_ = 0;
    ++n_;
    loaded_ = false;
  }

  std::shared_ptr<const RcfExpansion> e_;
  std::uint64_t n_ = 0, j_ = 0, lam_ = 0;
  BigInt pm_{1}, pc_{0}, qm_{0}, qc_{1};
  std::optional<std::uint64_t> a_;
  bool loaded_ = false;
};

// first n symbols of 0^{a_1-1} 1 0^{a_2-1} 1 ...
inline std::vector<int> epsilon_bits(const RcfExpansion& e, std::size_t n) {
  OrbitWalker w(e);
  std::vector<int> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(w.next_bit());
    w.step();
  }
  return out;
}

struct OrbitEntry {
  FareyState state;
  PointInOmega point;
};

// entries for k = 0 .. count
inline std::vector<OrbitEntry> orbit(const RcfExpansion& e, std::size_t count,
                                     std::size_t depth = kDefaultEnclosureDepth) {
  OrbitWalker w(e);
  std::vector<OrbitEntry> out;
  out.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    out.push_back({w.state(), w.point(depth)});
    if (k < count) w.step();
  }
  return out;
}

}  // namespace farey
