#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cf_core.hpp"
#include "errors.hpp"
#include "farey_dynamics.hpp"
#include "regions.hpp"

namespace farey {

struct InducedOptions {
  std::size_t depth = kDefaultEnclosureDepth;
  // Cap on work per hitting attempt. One unit is one exactly examined orbit point
  // or one block skipped because its grid cells provably miss the region.
  std::uint64_t step_cap = 1'000'000;
};

struct InducedEntry {
  std::uint64_t N = 0;
  FareyState state;
  PointInOmega point;
};

// Streams the visits of the Farey orbit of (x, 1) to a region.
class InducedWalker {
 public:
  InducedWalker(const RcfExpansion& e, Region R, InducedOptions opt = {})
      : w_(e), R_(std::move(R)), opt_(opt) {}

  // Move to the next visit. The first call accepts the start point itself (N_0 = 0).
  void next() {
    bool accept_here = !started_;
    started_ = true;
    std::uint64_t from = w_.n();
    std::uint64_t work = 0;
    auto charge = [&] {
      if (++work > opt_.step_cap) throw NonRecurrent(work - 1, from);
    };
    for (;;) {
      const auto& a = w_.block_digit();
      if (!a) {
        // x_n = 0 from here on: plain stepping
        if (!accept_here) w_.step();
        accept_here = false;
        charge();
        if (check()) return;
        continue;
      }
      std::uint64_t lo = w_.lambda() + (accept_here ? 0 : 1);
      accept_here = false;
      if (lo < *a) {
        for (const auto& rg : ranges(*a, interior())) {
          if (rg.second < lo) continue;
          for (std::uint64_t lam = std::max(rg.first, lo); lam <= rg.second; ++lam) {
            w_.jump_to(lam);
            charge();
            if (check()) return;
          }
        }
      }
      w_.next_block();
      accept_here = true;
      charge();
    }
  }

  // place the walker at raw step n without examining it; the next visit is sought strictly after n
  void seek(std::uint64_t n) {
    while (w_.n() < n) {
      auto left = w_.steps_to_block_end();
      if (left && w_.n() + *left <= n) {
        w_.next_block();
      } else if (left) {
        w_.jump_to(w_.lambda() + (n - w_.n()));
      } else {
        w_.step();
      }
    }
    started_ = true;
  }

  OrbitWalker& walker() { return w_; }
  std::uint64_t N() const { return w_.n(); }
  FareyState state() const { return w_.state(); }
  const PointInOmega& point() const { return pt_; }
  Enclosure theta() const { return h_value(pt_); }
  const Region& region() const { return R_; }

 private:
  bool check() {
    pt_ = w_.point(opt_.depth);
    Membership m = R_.contains(pt_);
    if (m == Membership::BoundaryUncertain) {
      pt_ = w_.point(2 * opt_.depth);
      m = R_.contains(pt_);
      const RcfExpansion& e = w_.expansion();
      std::size_t want = static_cast<std::size_t>(w_.j()) + 1 + 2 * opt_.depth;
      if (m == Membership::BoundaryUncertain && !e.terminated && !e.is_periodic() && want > e.digits.size())
        throw BudgetExhausted(want);
      if (m == Membership::BoundaryUncertain)
        throw PrecisionError("boundary undecided at step " + std::to_string(w_.n()) +
                             " with doubled enclosure depth");
    }
    return m == Membership::In;
  }

  // every point of the current block lies in the interior of its grid cell
  bool interior() {
    const BigInt& qm = w_.q_prev();
    if (sgn(qm) == 0) return false;
    if (!(qm < w_.q_cur())) return false;
    const RcfExpansion& e = w_.expansion();
    return !e.terminated || e.digits.size() >= static_cast<std::size_t>(w_.j()) + 2;
  }

  const LambdaRanges& ranges(std::uint64_t a, bool interior) {
    auto& cache = cache_[interior ? 1 : 0];
    if (a < kCache) {
      if (cache.size() <= a) cache.resize(a + 1);
      if (!cache[a]) cache[a] = R_.candidate_lambdas(a, interior);
      return *cache[a];
    }
    scratch_ = R_.candidate_lambdas(a, interior);
    return scratch_;
  }

  static constexpr std::uint64_t kCache = 4096;
  OrbitWalker w_;
  Region R_;
  InducedOptions opt_;
  PointInOmega pt_;
  bool started_ = false;
  std::vector<std::optional<LambdaRanges>> cache_[2];
  LambdaRanges scratch_;
};

// least n >= 1 with the orbit point at step from_step + n in R
inline std::uint64_t hitting_time(const RcfExpansion& e, const Region& R, std::uint64_t from_step,
                                  InducedOptions opt = {}) {
  InducedWalker iw(e, R, opt);
  iw.seek(from_step);
  iw.next();
  return iw.N() - from_step;
}

struct InducedOrbit {
  Region region;
  std::vector<InducedEntry> entries;

  std::vector<std::uint64_t> return_times() const {
    std::vector<std::uint64_t> r;
    for (std::size_t k = 1; k < entries.size(); ++k) r.push_back(entries[k].N - entries[k - 1].N);
    return r;
  }
};

// entries 0 .. count: the first visit (N_0 = 0 when (x,1) lies in R) and `count` returns
inline InducedOrbit induced_orbit(const RcfExpansion& e, const Region& R, std::size_t count,
                                  InducedOptions opt = {}) {
  InducedOrbit out{R, {}};
  InducedWalker iw(e, R, opt);
  out.entries.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    iw.next();
    out.entries.push_back({iw.N(), iw.state(), iw.point()});
  }
  return out;
}

inline std::vector<Enclosure> theta_induced(const RcfExpansion& e, const Region& R, std::size_t count,
                                            InducedOptions opt = {}) {
  std::vector<Enclosure> out;
  out.reserve(count + 1);
  InducedWalker iw(e, R, opt);
  for (std::size_t k = 0; k <= count; ++k) {
    iw.next();
    out.push_back(iw.theta());
  }
  return out;
}

namespace detail {

// visits of S and R among raw steps k < steps
inline std::pair<std::uint64_t, std::uint64_t> count_visits(const RcfExpansion& e, std::uint64_t steps,
                                                            const Region& S, const Region& R,
                                                            std::size_t depth) {
  OrbitWalker w(e);
  std::uint64_t cs = 0, cr = 0;
  auto decide = [&](const Region& reg) {
    Membership m = reg.contains(w.point(depth));
    if (m == Membership::BoundaryUncertain) m = reg.contains(w.point(2 * depth));
    if (m == Membership::BoundaryUncertain) throw PrecisionError("boundary undecided");
    return m == Membership::In;
  };
  while (w.n() < steps) {
    const auto& a = w.block_digit();
    if (!a) {
      if (decide(S)) ++cs;
      if (decide(R)) ++cr;
      w.step();
      continue;
    }
    std::uint64_t block_start = w.n();
    std::uint64_t limit = std::min<std::uint64_t>(*a, steps - block_start);  // offsets [0, limit)
    auto rs = S.candidate_lambdas(*a);
    auto rr = R.candidate_lambdas(*a);
    LambdaRanges all = rs;
    all.insert(all.end(), rr.begin(), rr.end());
    all = merge_ranges(all);
    auto in = [](const LambdaRanges& v, std::uint64_t lam) {
      for (auto& q : v)
        if (lam >= q.first && lam <= q.second) return true;
      return false;
    };
    for (const auto& rg : all) {
      if (rg.first >= limit) break;
      for (std::uint64_t lam = rg.first; lam <= rg.second && lam < limit; ++lam) {
        w.jump_to(lam);
        if (in(rs, lam) && decide(S)) ++cs;
        if (in(rr, lam) && decide(R)) ++cr;
      }
    }
    if (block_start + *a > steps) break;
    w.next_block();
  }
  return {cs, cr};
}

}  // namespace detail

inline double visit_ratio(const RcfExpansion& e, std::uint64_t steps, const Region& S, const Region& R,
                          std::size_t depth = kDefaultEnclosureDepth) {
  auto [cs, cr] = detail::count_visits(e, steps, S, R, depth);
  if (cr == 0) throw DomainError("no visits to the reference region within the step budget");
  return static_cast<double>(cs) / static_cast<double>(cr);
}

struct LevyEstimate {
  double log_denominator;  // (1/n) log s_n
  double log_error;        // (1/n) log |x - u_n / s_n|
};

inline LevyEstimate levy_estimates(const RcfExpansion& e, const Region& R, std::size_t count,
                                   InducedOptions opt = {}) {
  if (count == 0) throw DomainError("levy_estimates needs count >= 1");
  InducedWalker iw(e, R, opt);
  for (std::size_t k = 0; k <= count; ++k) iw.next();
  BigInt s = iw.walker().s();
  if (sgn(s) == 0) throw DomainError("formal convergent at the requested index");
  double ls = log_big(s);
  double th = iw.theta().mid();
  double n = static_cast<double>(count);
  // |x - u/s| = Theta / s^2
  return {ls / n, (std::log(th) - 2.0 * ls) / n};
}

inline double entropy(const Region& R) {
  double m = R.measure();
  if (!(m > 0) || !std::isfinite(m)) throw DomainError("entropy needs a proper region");
  return std::numbers::pi * std::numbers::pi / (6.0 * m);
}

struct ConjugacyResidual {
  std::vector<double> residuals;  // per return k = 0 .. count
  double max = 0;
  double last = 0;
};

// Compares the H_1 returns of (x, 1), carried to Gauss coordinates by
// (x, y) -> (x, 1/y - 1), with the Gauss natural-extension orbit of (x, y0).
// The H_1 returns are taken at the block starts n = a_1 + ... + a_k.
inline ConjugacyResidual gauss_conjugacy_residual(const RcfExpansion& e, std::size_t count,
                                                  const Rational& y0 = Rational(0),
                                                  std::size_t depth = kDefaultEnclosureDepth) {
  OrbitWalker w(e);
  ConjugacyResidual out;
  Rational gy = y0;
  auto dist = [](const Rational& alo, const Rational& ahi, const Rational& blo, const Rational& bhi) {
    Rational d1 = abs(ahi - blo), d2 = abs(bhi - alo);
    return std::max(d1, d2).to_double();
  };
  for (std::size_t k = 0; k <= count; ++k) {
    if (k > 0) {
      w.next_block();
      gy = (Rational(e.digit(k)) + gy).inverse();
    }
    PointInOmega p = w.point(depth);
    Rational fy = p.y.inverse() - Rational(1);
    // Gauss side: x_k = [0; a_{k+1}, a_{k+2}, ...] from its own digits
    Rational glo, ghi;
    {
      BigInt P0(0), Q0(1), Pm(1), Qm(0);
      std::size_t used = 0;
      bool ended = false;
      for (std::size_t i = 1; e.terminated || i <= depth; ++i) {
        auto d = e.has_digit(k + i) ? e.digit_or_end(k + i) : std::nullopt;
        if (!d) {
          ended = e.terminated;
          break;
        }
        BigInt P1 = *d * P0 + Pm, Q1 = *d * Q0 + Qm;
        Pm.swap(P0);
        Qm.swap(Q0);
        P0.swap(P1);
        Q0.swap(Q1);
        ++used;
      }
      if (e.terminated || ended) {
        glo = ghi = Rational::from_reduced(P0, Q0);
      } else {
        if (used == 0) throw BudgetExhausted(k + 1);
        Rational a = Rational::from_reduced(P0, Q0), b = Rational::from_reduced(Pm, Qm);
        glo = std::min(a, b);
        ghi = std::max(a, b);
      }
    }
    double r = std::max(dist(p.x_lo, p.x_hi, glo, ghi), abs(fy - gy).to_double());
    out.residuals.push_back(r);
    out.max = std::max(out.max, r);
    out.last = r;
  }
  return out;
}

// --- block reordering -------------------------------------------------------

namespace detail {

// partial sums A_0 = 0, A_1, ..., extended until A_k >= n
inline std::vector<std::uint64_t> partial_sums_through(const RcfExpansion& e, std::uint64_t n) {
  std::vector<std::uint64_t> A{0};
  std::size_t k = 1;
  while (A.back() < n) {
    A.push_back(A.back() + to_u64(e.digit(k)));
    ++k;
  }
  return A;
}

// j_N = max { j : A_j <= N }
inline std::uint64_t j_of(const std::vector<std::uint64_t>& A, std::uint64_t N) {
  auto it = std::upper_bound(A.begin(), A.end(), N);
  return static_cast<std::uint64_t>(it - A.begin()) - 1;
}

inline std::uint64_t rho_with(const std::vector<std::uint64_t>& A, std::uint64_t n) {
  if (n == 0) return 0;
  auto it = std::lower_bound(A.begin(), A.end(), n);  // first A_{j+1} >= n
  std::uint64_t hi = *it, lo = *(it - 1);
  return n == lo + 1 ? hi : n - 1;
}

inline std::uint64_t rho_inverse_with(const std::vector<std::uint64_t>& A, std::uint64_t m) {
  if (m == 0) return 0;
  auto it = std::lower_bound(A.begin(), A.end(), m);
  std::uint64_t hi = *it, lo = *(it - 1);
  return m == hi ? lo + 1 : m + 1;
}

}  // namespace detail

// cyclic shift of each block (A_j + 1, ..., A_{j+1}) -> (A_{j+1}, A_j + 1, ..., A_{j+1} - 1)
inline std::uint64_t rho_map(const RcfExpansion& e, std::uint64_t n) {
  return detail::rho_with(detail::partial_sums_through(e, n), n);
}

inline std::uint64_t rho_inverse(const RcfExpansion& e, std::uint64_t m) {
  return detail::rho_inverse_with(detail::partial_sums_through(e, m), m);
}

struct Rearrangement {
  std::vector<std::uint64_t> N;      // induced indices N_0 < N_1 < ...
  std::vector<std::uint64_t> order;  // order[n] = rho_R(n)
  std::vector<std::uint64_t> A;      // block boundaries covering N
};

// Induced indices through the end of the block containing N_n, and rho_R on them.
inline Rearrangement rearrangement(const RcfExpansion& e, const Region& R, std::size_t n,
                                   InducedOptions opt = {}) {
  Rearrangement out;
  InducedWalker iw(e, R, opt);
  iw.next();
  out.N.push_back(iw.N());
  while (out.N.size() <= n) {
    iw.next();
    out.N.push_back(iw.N());
  }
  out.A = detail::partial_sums_through(e, out.N.back());
  std::uint64_t block_end = *std::lower_bound(out.A.begin(), out.A.end(), out.N.back());
  if (out.N.back() == 0) block_end = 0;
  for (;;) {
    // peek: does another visit fall inside the same block
    InducedWalker peek = iw;
    try {
      peek.next();
    } catch (const BudgetExhausted&) {
      break;  // digits ran out past the block end
    }
    if (peek.N() > block_end) break;
    iw = peek;
    out.N.push_back(iw.N());
  }
  std::vector<std::uint64_t> idx(out.N.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::vector<std::uint64_t> key(out.N.size());
  for (std::size_t k = 0; k < key.size(); ++k) key[k] = detail::rho_inverse_with(out.A, out.N[k]);
  std::sort(idx.begin(), idx.end(), [&](std::uint64_t a, std::uint64_t b) { return key[a] < key[b]; });
  out.order = std::move(idx);
  return out;
}

inline std::uint64_t rho_R(const RcfExpansion& e, const Region& R, std::size_t n, InducedOptions opt = {}) {
  return rearrangement(e, R, n, opt).order[n];
}

struct RearrangementCheck {
  std::uint64_t sym_diff = 0;
  std::uint64_t j_gap = 0;
};

// checks for every m = 0 .. n
inline std::vector<RearrangementCheck> rearrangement_profile(const RcfExpansion& e, const Region& R,
                                                             std::size_t n, InducedOptions opt = {}) {
  Rearrangement rr = rearrangement(e, R, n, opt);
  std::vector<RearrangementCheck> out;
  out.reserve(n + 1);
  // membership counts: +1 from the natural prefix, +2 from the reordered prefix
  std::vector<int> tag(rr.N.size(), 0);
  std::int64_t diff = 0;
  auto bump = [&](std::size_t k, int bit) {
    int before = tag[k];
    tag[k] |= bit;
    bool was_odd = before == 1 || before == 2;
    bool is_odd = tag[k] == 1 || tag[k] == 2;
    diff += (is_odd ? 1 : 0) - (was_odd ? 1 : 0);
  };
  for (std::size_t m = 0; m <= n; ++m) {
    bump(m, 1);
    bump(rr.order[m], 2);
    std::uint64_t ja = detail::j_of(rr.A, rr.N[rr.order[m]]);
    std::uint64_t jb = detail::j_of(rr.A, rr.N[m]);
    out.push_back({static_cast<std::uint64_t>(diff), ja > jb ? ja - jb : jb - ja});
  }
  return out;
}

inline RearrangementCheck rearrangement_check(const RcfExpansion& e, const Region& R, std::size_t n,
                                              InducedOptions opt = {}) {
  return rearrangement_profile(e, R, n, opt).back();
}

// s_N for N = rho(0), ..., rho(n)
inline std::vector<BigInt> rho_denominators(const RcfExpansion& e, std::uint64_t n) {
  auto A = detail::partial_sums_through(e, n);
  auto cv = rcf_convergents(e, A.size());
  std::vector<BigInt> out;
  out.reserve(n + 1);
  for (std::uint64_t m = 0; m <= n; ++m) {
    std::uint64_t N = detail::rho_with(A, m);
    std::uint64_t j = detail::j_of(A, N);
    std::uint64_t lam = N - A[j];
    // s_N = lam q_j + q_{j-1}; cv[k + 1] holds index k
    out.push_back(cv[j + 1].q * lam + cv[j].q);
  }
  return out;
}

// --- mergeable orbit statistics ---------------------------------------------

struct OrbitStats {
  std::uint64_t total_steps = 0;
  std::vector<std::uint64_t> visits;      // per region
  std::vector<double> bin_edges;          // histogram of Theta
  std::vector<std::uint64_t> bin_counts;  // bin_edges.size() + 1 bins (under/overflow at the ends)
  double sum_log_s = 0;
  double sum_log_err = 0;
  std::uint64_t levy_count = 0;
  std::vector<double> samples;  // pooled Theta values

  void add_theta(double v) {
    samples.push_back(v);
    if (!bin_edges.empty()) {
      if (bin_counts.size() != bin_edges.size() + 1) bin_counts.assign(bin_edges.size() + 1, 0);
      auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), v);
      ++bin_counts[static_cast<std::size_t>(it - bin_edges.begin())];
    }
  }

  void merge(const OrbitStats& o) {
    total_steps += o.total_steps;
    if (visits.size() < o.visits.size()) visits.resize(o.visits.size(), 0);
    for (std::size_t i = 0; i < o.visits.size(); ++i) visits[i] += o.visits[i];
    if (bin_edges.empty()) bin_edges = o.bin_edges;
    if (bin_counts.size() < o.bin_counts.size()) bin_counts.resize(o.bin_counts.size(), 0);
    for (std::size_t i = 0; i < o.bin_counts.size(); ++i) bin_counts[i] += o.bin_counts[i];
    sum_log_s += o.sum_log_s;
    sum_log_err += o.sum_log_err;
    levy_count += o.levy_count;
    samples.insert(samples.end(), o.samples.begin(), o.samples.end());
  }
};

}  // namespace farey
