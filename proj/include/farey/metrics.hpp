#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cf_core.hpp"
#include "errors.hpp"
#include "farey_dynamics.hpp"
#include "parallel.hpp"
#include "rational.hpp"
#include "regions.hpp"

namespace farey {

// ---------------------------------------------------------------------------
// x enclosures and Theta(x, p/q) = q |q x - p|

struct XRange {
  Rational lo, hi;
  bool exact = false;
};

// Whole value for terminated expansions; otherwise the last two convergents of
// the first `max_digits` digits (all available digits when max_digits == 0).
inline XRange x_range(const RcfExpansion& e, std::size_t max_digits = 0) {
  std::size_t n;
  if (e.terminated) {
    n = e.digits.size();
  } else if (e.is_periodic()) {
    n = max_digits ? max_digits : e.digits.size() + 64 * e.period.size();
  } else {
    n = max_digits ? std::min(max_digits, e.digits.size()) : e.digits.size();
  }
  auto cv = rcf_convergents(e, n);
  XRange r;
  Rational last = cv.back().value();
  if (e.terminated) {
    r.lo = r.hi = last;
    r.exact = true;
    return r;
  }
  if (n == 0) throw BudgetExhausted(1);
  Rational prev = cv[cv.size() - 2].value();
  r.lo = std::min(last, prev);
  r.hi = std::max(last, prev);
  return r;
}

// digits until q_k exceeds 2^bits (or the budget ends)
inline XRange x_range_bits(const RcfExpansion& e, unsigned bits) {
  if (e.terminated) return x_range(e);
  BigInt qm(0), qc(1), lim(1);
  lim <<= bits;
  std::size_t k = 0;
  while (qc <= lim && e.has_digit(k + 1)) {
    ++k;
    BigInt qn = e.digit(k) * qc + qm;
    qm.swap(qc);
    qc.swap(qn);
  }
  return x_range(e, std::max<std::size_t>(k + 1, 2));
}

inline Ratio theta_at(const Rational& x, const BigInt& p, const BigInt& q) {
  // q |q P - p Q| / Q
  BigInt d = q * x.num() - p * x.den();
  return Ratio(q * abs(d), x.den());
}

inline void require_reduced(const BigInt& p, const BigInt& q) {
  if (sgn(q) < 0) throw DomainError("q must be >= 0");
  BigInt g;
  mpz_gcd(g.get_mpz_t(), p.get_mpz_t(), q.get_mpz_t());
  if (g != 1) throw DomainError("p/q must be reduced");
}

inline Enclosure theta(const XRange& x, const BigInt& p, const BigInt& q) {
  require_reduced(p, q);
  if (sgn(q) == 0) return Enclosure(Ratio(BigInt(0), BigInt(1)));
  if (x.exact) return Enclosure(theta_at(x.lo, p, q));
  Rational pq(p, q);
  Ratio a = theta_at(x.lo, p, q), b = theta_at(x.hi, p, q);
  if (x.lo < pq && pq < x.hi) return Enclosure(Ratio(BigInt(0), BigInt(1)), std::max(a, b));
  return Enclosure(a, b);
}

inline Enclosure theta(const Rational& x, const BigInt& p, const BigInt& q) {
  return theta(XRange{x, x, true}, p, q);
}

inline Enclosure theta(const RcfExpansion& e, const BigInt& p, const BigInt& q) {
  return theta(x_range(e), p, q);
}

// ---------------------------------------------------------------------------
// limiting distributions

enum class Family { CorI, CorII, CorIII, CorIV, CorV, CorVI, CorVII, Numeric };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::CorI: return "cor-i";
    case Family::CorII: return "cor-ii";
    case Family::CorIII: return "cor-iii";
    case Family::CorIV: return "cor-iv";
    case Family::CorV: return "cor-v";
    case Family::CorVI: return "cor-vi";
    case Family::CorVII: return "cor-vii";
    default: return "numeric";
  }
}

inline Family parse_family(const std::string& s) {
  static const std::map<std::string, Family> m{{"cor-i", Family::CorI},     {"cor-ii", Family::CorII},
                                               {"cor-iii", Family::CorIII}, {"cor-iv", Family::CorIV},
                                               {"cor-v", Family::CorV},     {"cor-vi", Family::CorVI},
                                               {"cor-vii", Family::CorVII}};
  auto it = m.find(s);
  if (it == m.end()) throw DomainError("unknown family '" + s + "'");
  return it->second;
}

struct FamilyParams {
  std::uint64_t lambda = 1;  // cor-ii, cor-vi
  std::uint64_t a = 1;       // cor-iii, cor-iv, cor-vi
  double z0 = 1;             // cor-v
  std::uint64_t Lambda = 1;  // cor-vii
  std::uint64_t A = 1;       // cor-vii
};

// region whose Theta distribution the family describes
inline Region family_region(Family f, const FamilyParams& p) {
  switch (f) {
    case Family::CorI: return Region::h_strip(1);
    case Family::CorII: return Region::h_strip(p.lambda + 1);
    case Family::CorIII: return Region::v_strip(p.a);
    case Family::CorIV: return Region::v_strip(p.a) - Region::h_strip(1);
    case Family::CorV: return Region::sublevel(p.z0);
    case Family::CorVI: return Region::v_strip(p.a - p.lambda) & Region::h_strip(p.lambda + 1);
    case Family::CorVII: {
      Region r = Region::h_strip(1);
      for (std::uint64_t l = 1; l <= p.Lambda; ++l) r = r | Region::h_strip(l + 1);
      for (std::uint64_t a = 1; a <= p.A; ++a) r = r | Region::v_strip(a);
      return r;
    }
    default: throw DomainError("numeric family has no canonical region");
  }
}

struct CdfPiece {
  double lo, hi;
  std::function<double(double)> f;
  bool linear = false;
};

class CdfModel {
 public:
  Family family = Family::Numeric;
  FamilyParams params;
  double C = 0;
  double z_min = 0, z_max = 0;

  // F(z) is the sum over components of the piece containing z
  std::vector<std::vector<CdfPiece>> components;
  // numeric table
  std::vector<double> zs, fs;

  double operator()(double z) const {
    if (z <= z_min) return 0.0;
    if (z >= z_max) return 1.0;
    if (family == Family::Numeric) {
      auto it = std::upper_bound(zs.begin(), zs.end(), z);
      std::size_t i = static_cast<std::size_t>(it - zs.begin());
      if (i == 0) return fs.front();
      if (i >= zs.size()) return fs.back();
      double t = (z - zs[i - 1]) / (zs[i] - zs[i - 1]);
      return fs[i - 1] + t * (fs[i] - fs[i - 1]);
    }
    double total = 0;
    for (const auto& comp : components) {
      for (const auto& pc : comp) {
        if (z >= pc.lo && z <= pc.hi) {
          total += pc.f(z);
          break;
        }
      }
    }
    return total;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    if (family == Family::Numeric) return zs;
    for (const auto& comp : components)
      for (const auto& pc : comp) {
        b.push_back(pc.lo);
        b.push_back(pc.hi);
      }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
};

namespace detail {

// append [lo, hi] unless vacuous
inline void piece(std::vector<CdfPiece>& v, double lo, double hi, std::function<double(double)> f,
                  bool linear = false) {
  if (hi > lo) v.push_back({lo, hi, std::move(f), linear});
}

// shape shared by the lambda-th mediant strip and V_a minus H_1
inline std::vector<CdfPiece> strip_shape(double l, double C) {
  std::vector<CdfPiece> v;
  piece(v, l / (l + 1), (l + 1) / (l + 2), [=](double z) {
    return ((l + 1) / l * z - 1 + std::log(l / ((l + 1) * z))) / C;
  });
  piece(v, (l + 1) / (l + 2), l, [=](double z) {
    return (z / (l * (l + 1)) + std::log(l * (l + 2) / ((l + 1) * (l + 1)))) / C;
  }, true);
  piece(v, l, l + 1, [=](double z) {
    return (1 - z / (l + 1) + std::log((l + 2) * z / ((l + 1) * (l + 1)))) / C;
  });
  return v;
}

}  // namespace detail

inline CdfModel cdf_closed_form(Family f, const FamilyParams& p) {
  CdfModel m;
  m.family = f;
  m.params = p;
  using detail::piece;
  switch (f) {
    case Family::CorI: {
      double C = std::log(2.0);
      m.C = C;
      m.z_min = 0;
      m.z_max = 1;
      std::vector<CdfPiece> v;
      piece(v, 0, 0.5, [=](double z) { return z / C; }, true);
      piece(v, 0.5, 1, [=](double z) { return (1 - z + std::log(2 * z)) / C; });
      m.components.push_back(std::move(v));
      break;
    }
    case Family::CorII:
    case Family::CorIV: {
      double l = f == Family::CorII ? static_cast<double>(p.lambda) : static_cast<double>(p.a);
      if (l < 1) throw DomainError(f == Family::CorII ? "cor-ii needs lambda >= 1" : "cor-iv needs a >= 1");
      double C = std::log((l + 2) / (l + 1));
      m.C = C;
      m.z_min = l / (l + 1);
      m.z_max = l + 1;
      m.components.push_back(detail::strip_shape(l, C));
      break;
    }
    case Family::CorIII: {
      double a = static_cast<double>(p.a);
      if (a < 1) throw DomainError("cor-iii needs a >= 1");
      double C = std::log((a + 1) / a);
      m.C = C;
      m.z_min = 0;
      m.z_max = a + 1;
      std::vector<CdfPiece> v;
      piece(v, 0, a, [=](double z) { return z / (a * (a + 1)) / C; }, true);
      piece(v, a, a + 1, [=](double z) { return (1 - z / (a + 1) + std::log(z / a)) / C; });
      m.components.push_back(std::move(v));
      break;
    }
    case Family::CorV: {
      double z0 = p.z0;
      if (!(z0 > 0) || !std::isfinite(z0)) throw DomainError("cor-v needs z0 > 0");
      std::vector<CdfPiece> v;
      m.z_min = 0;
      m.z_max = z0;
      if (z0 <= 1) {
        m.C = z0;
        piece(v, 0, z0, [=](double z) { return z / z0; }, true);
      } else {
        double C = 1 + std::log(z0);
        m.C = C;
        piece(v, 0, 1, [=](double z) { return z / C; }, true);
        piece(v, 1, z0, [=](double z) { return (1 + std::log(z)) / C; });
      }
      m.components.push_back(std::move(v));
      break;
    }
    case Family::CorVI: {
      double a = static_cast<double>(p.a), l = static_cast<double>(p.lambda);
      if (p.a < 1 || p.lambda >= p.a) throw DomainError("cor-vi needs 0 <= lambda < a");
      double C = std::log((a + 1) * (a + 1) / (a * (a + 2)));
      double m_ = a - l;
      double L = m_ * l / a, U = (m_ + 1) * (l + 1) / (a + 2);
      double m1 = (m_ + 1) * l / (a + 1), m2 = m_ * (l + 1) / (a + 1);
      m.C = C;
      m.z_min = L;
      m.z_max = U;
      std::vector<CdfPiece> v;
      if (p.lambda > 0) {
        piece(v, L, std::min(m1, m2), [=](double z) {
          return (a / (m_ * l) * z - 1 + std::log(m_ * l / (a * z))) / C;
        });
        piece(v, m2, m1, [=](double z) {
          return (z / (l * (l + 1)) + std::log((a + 1) * l / (a * (l + 1)))) / C;
        }, true);
      }
      piece(v, m1, m2, [=](double z) {
        return (z / (m_ * (m_ + 1)) + std::log((a + 1) * m_ / (a * (m_ + 1)))) / C;
      }, true);
      piece(v, std::max(m1, m2), U, [=](double z) {
        return (1 - (a + 2) * z / ((m_ + 1) * (l + 1)) + std::log((a + 1) * (a + 1) * z / (a * (m_ + 1) * (l + 1)))) /
               C;
      });
      m.components.push_back(std::move(v));
      break;
    }
    case Family::CorVII: {
      double L = static_cast<double>(p.Lambda), A = static_cast<double>(p.A);
      if (p.A < 1) throw DomainError("cor-vii needs A >= 1");
      double C = std::log(L + A + 2);
      double top = std::max(L + 1, A + 1);
      double e1 = (L + 1) / (L + 2);
      double M = (L + 1) * (A + 1) / (L + A + 2);
      m.C = C;
      m.z_min = 0;
      m.z_max = top;
      std::vector<CdfPiece> r1, r2;
      piece(r1, 0, e1, [=](double z) { return z / C; }, true);
      piece(r1, e1, L + 1, [=](double z) { return (1 - z / (L + 1) + std::log((L + 2) * z / (L + 1))) / C; });
      piece(r1, L + 1, top, [=](double) { return std::log(L + 2) / C; }, true);
      piece(r2, 0, e1, [](double) { return 0.0; }, true);
      piece(r2, e1, std::min(M, 1.0), [=](double z) {
        return ((L + 2) * z / (L + 1) - 1 + std::log((L + 1) / ((L + 2) * z))) / C;
      });
      piece(r2, 1, M, [=](double z) { return (z / (L + 1) + std::log((L + 1) / (L + 2))) / C; }, true);
      piece(r2, M, 1, [=](double z) {
        return (A * z / (A + 1) + std::log((L + A + 2) / ((L + 2) * (A + 1)))) / C;
      }, true);
      piece(r2, std::max(M, 1.0), A + 1, [=](double z) {
        return (1 - z / (A + 1) + std::log((L + A + 2) * z / ((L + 2) * (A + 1)))) / C;
      });
      piece(r2, A + 1, top, [=](double) { return std::log((L + A + 2) / (L + 2)) / C; }, true);
      m.components.push_back(std::move(r1));
      m.components.push_back(std::move(r2));
      break;
    }
    default: throw DomainError("not a closed-form family");
  }
  return m;
}

// z -> sublevel_measure(R, z) / measure(R), tabulated with midpoint interpolation error below tol
inline CdfModel cdf_numeric(const Region& R, double tol = 2e-7) {
  double C = R.measure();
  if (!(C > 0) || !std::isfinite(C)) throw DomainError("cdf_numeric needs a proper region");
  auto [lo, hi] = R.h_range();
  if (!std::isfinite(hi)) throw DomainError("h is unbounded on the region");
  CdfModel m;
  m.family = Family::Numeric;
  m.C = C;
  m.z_min = lo;
  m.z_max = hi;
  auto F = [&](double z) { return std::clamp(R.sublevel_measure(z) / C, 0.0, 1.0); };
  std::vector<std::pair<double, double>> pts;
  std::function<void(double, double, double, double, int)> refine = [&](double a, double fa, double b, double fb,
                                                                       int depth) {
    double mid = 0.5 * (a + b);
    double fm = F(mid);
    if (depth < 40 && std::abs(fm - 0.5 * (fa + fb)) > tol) {
      refine(a, fa, mid, fm, depth + 1);
      refine(mid, fm, b, fb, depth + 1);
      return;
    }
    pts.push_back({mid, fm});
    pts.push_back({b, fb});
  };
  const int n0 = 64;
  double prev = lo, fprev = 0.0;
  pts.push_back({lo, 0.0});
  for (int i = 1; i <= n0; ++i) {
    double z = lo + (hi - lo) * i / n0;
    double fz = i == n0 ? 1.0 : F(z);
    refine(prev, fprev, z, fz, 0);
    prev = z;
    fprev = fz;
  }
  std::sort(pts.begin(), pts.end());
  for (auto& [z, f] : pts) {
    if (!m.zs.empty() && z == m.zs.back()) continue;
    m.zs.push_back(z);
    m.fs.push_back(f);
  }
  for (std::size_t i = 1; i < m.fs.size(); ++i) m.fs[i] = std::max(m.fs[i], m.fs[i - 1]);
  return m;
}

// sup-norm distance between the empirical step CDF of the samples and the model
inline double ks_distance(std::vector<double> samples, const CdfModel& model) {
  if (samples.empty()) throw DomainError("ks_distance needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    double F = model(samples[i]);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(j) / n - F});
    i = j;
  }
  return d;
}

inline double ks_distance(const std::vector<Enclosure>& samples, const CdfModel& model) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.mid());
  return ks_distance(std::move(v), model);
}

// end of the maximal initial interval on which the model is affine
inline double lenstra_constant(const CdfModel& m) {
  if (m.family == Family::Numeric) {
    if (m.zs.size() < 3) throw DomainError("table too short");
    auto slope = [&](std::size_t i) { return (m.fs[i + 1] - m.fs[i]) / (m.zs[i + 1] - m.zs[i]); };
    double s0 = slope(0);
    std::size_t i = 1;
    while (i + 1 < m.zs.size() && std::abs(slope(i) - s0) <= 1e-5 * std::max(1.0, std::abs(s0))) ++i;
    if (i < 4) throw DomainError("model has no leading linear branch");
    return m.zs[i];
  }
  auto bps = m.breakpoints();
  double end = m.z_min;
  double s0 = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    double a = bps[k], b = bps[k + 1];
    if (b <= m.z_min) continue;
    double mid = 0.5 * (a + b);
    bool affine = true;
    for (const auto& comp : m.components) {
      for (const auto& pc : comp)
        if (mid >= pc.lo && mid <= pc.hi) {
          affine = affine && pc.linear;
          break;
        }
    }
    if (!affine) break;
    double s = (m(b) - m(a)) / (b - a);
    if (std::isnan(s0)) s0 = s;
    if (std::abs(s - s0) > 1e-12 * std::max(1.0, std::abs(s0))) break;
    end = b;
  }
  if (end <= m.z_min) throw DomainError("model has no leading linear branch");
  return end;
}

// ---------------------------------------------------------------------------
// convergent / mediant classification

enum class ApproxKind { Convergent, FirstMediant, FinalMediant, OtherMediant, NotAConvergentOrMediant };

struct ApproxClass {
  ApproxKind kind = ApproxKind::NotAConvergentOrMediant;
  std::int64_t j = -1;          // convergent index, or block index of a mediant
  std::uint64_t lambda = 0;     // mediant offset
  bool first = false, final = false;
  std::optional<BigInt> a_next;  // a_{j+1} for mediants

  bool convergent() const { return kind == ApproxKind::Convergent; }
  bool mediant() const { return first || final || kind == ApproxKind::OtherMediant; }
  bool nearest() const { return first || final; }

  std::string label() const {
    switch (kind) {
      case ApproxKind::Convergent: return "Convergent";
      case ApproxKind::FirstMediant: return final ? "FirstMediant+FinalMediant" : "FirstMediant";
      case ApproxKind::FinalMediant: return "FinalMediant";
      case ApproxKind::OtherMediant: return "OtherMediant";
      default: return "NotAConvergentOrMediant";
    }
  }
};

inline ApproxClass mediant_class(std::int64_t j, std::uint64_t lam, const std::optional<BigInt>& a) {
  ApproxClass c;
  c.j = j;
  c.lambda = lam;
  c.a_next = a;
  c.first = lam == 1;
  c.final = a && BigInt(lam) + 1 == *a;
  c.kind = c.first ? ApproxKind::FirstMediant : c.final ? ApproxKind::FinalMediant : ApproxKind::OtherMediant;
  return c;
}

inline ApproxClass classify(const RcfExpansion& e, const BigInt& p, const BigInt& q, const BigInt& search_bound) {
  if (q < 1) throw DomainError("classify needs q >= 1");
  require_reduced(p, q);
  if (search_bound < q) throw DomainError("searchBound must be >= q");
  BigInt pm(1), pc(e.integer_part), qm(0), qc(1);
  for (std::size_t j = 0;; ++j) {
    if (qm > q) break;
    if (pm == p && qm == q) {
      ApproxClass c;
      c.kind = ApproxKind::Convergent;
      c.j = static_cast<std::int64_t>(j) - 1;
      return c;
    }
    auto a = e.digit_or_end(j + 1);
    if (sgn(qc) > 0 && q > qm) {
      BigInt diff = q - qm;
      if (mpz_divisible_p(diff.get_mpz_t(), qc.get_mpz_t())) {
        BigInt lam = diff / qc;
        if (lam >= 1 && (!a || lam < *a) && lam * pc + pm == p)
          return mediant_class(static_cast<std::int64_t>(j), to_u64(lam), a);
      }
    }
    if (!a) break;
    BigInt pn = *a * pc + pm, qn = *a * qc + qm;
    pm.swap(pc);
    qm.swap(qc);
    pc.swap(pn);
    qc.swap(qn);
  }
  return {};
}

struct FareyEntry {
  BigInt p, q;
  ApproxClass cls;
};

// all Farey convergents u/s of x with 1 <= s <= max_den
inline std::vector<FareyEntry> farey_table(const RcfExpansion& e, std::uint64_t max_den) {
  std::vector<FareyEntry> out;
  BigInt pm(1), pc(e.integer_part), qm(0), qc(1);
  const BigInt D = big(max_den);
  for (std::size_t j = 0;; ++j) {
    if (qm > D) break;
    auto a = e.digit_or_end(j + 1);
    if (sgn(qm) > 0) {
      ApproxClass c;
      c.kind = ApproxKind::Convergent;
      c.j = static_cast<std::int64_t>(j) - 1;
      out.push_back({pm, qm, c});
    }
    for (std::uint64_t lam = 1;; ++lam) {
      if (a && BigInt(lam) >= *a) break;
      BigInt s = qc * lam + qm;
      if (s > D) break;
      out.push_back({pc * lam + pm, s, mediant_class(static_cast<std::int64_t>(j), lam, a)});
    }
    if (!a) break;
    BigInt pn = *a * pc + pm, qn = *a * qc + qm;
    pm.swap(pc);
    qm.swap(qc);
    pc.swap(pn);
    qc.swap(qn);
  }
  return out;
}

// ---------------------------------------------------------------------------
// signature

struct Signature {
  int delta = 0;
  int eps_depth = 0;
  int eps_side = 0;
};

inline int side_of(const XRange& x, const Rational& v) {
  if (x.exact) {
    if (x.lo == v) throw DomainError("x equals p/q: side undefined");
    return x.lo < v ? -1 : +1;
  }
  // x lies strictly inside (lo, hi)
  if (!(v < x.hi)) return -1;
  if (!(x.lo < v)) return +1;
  throw PrecisionError("side of p/q undecidable within the digit budget");
}

inline Signature signature(const XRange& x, const BigInt& p, const BigInt& q) {
  if (sgn(q) <= 0 || sgn(p) <= 0 || p > q) throw DomainError("signature defined for p/q in (0,1] only");
  require_reduced(p, q);
  Rational v(p, q);
  std::size_t depth = rcf_expand(v).digits.size();
  Signature s;
  s.eps_depth = depth % 2 == 0 ? 1 : -1;
  s.eps_side = side_of(x, v);
  s.delta = s.eps_depth * s.eps_side;
  return s;
}

inline Signature signature(const RcfExpansion& e, const BigInt& p, const BigInt& q) {
  return signature(x_range(e), p, q);
}

// ---------------------------------------------------------------------------
// theorem sweeps

struct TheoremRecord {
  std::string theorem;
  std::string input;  // x description and p/q
  Enclosure theta;
  std::string cls;
  std::string verdict;
};

struct WitnessTarget {
  std::string name;  // e.g. "legendre"
  Rational c;        // constant
  int delta = 0;     // 0: any signature
  std::function<bool(const ApproxClass&)> conclusion;
};

struct SuiteReport {
  std::uint64_t pairs = 0;      // reduced p/q examined (including vacuous ones)
  std::uint64_t evaluated = 0;  // pairs with an explicit Theta evaluation
  std::uint64_t undecided = 0;  // premises not decidable from the enclosure
  std::map<std::string, std::uint64_t> checks;
  std::vector<TheoremRecord> violations;
  std::map<std::string, TheoremRecord> witnesses;  // best witness per target
  std::vector<std::string> missing_witnesses;

  bool ok() const { return violations.empty() && undecided == 0; }

  // order-sensitive only through witness ties, where the earlier report wins
  void merge(const SuiteReport& o) {
    pairs += o.pairs;
    evaluated += o.evaluated;
    undecided += o.undecided;
    for (const auto& [k, v] : o.checks) checks[k] += v;
    violations.insert(violations.end(), o.violations.begin(), o.violations.end());
    for (const auto& [k, w] : o.witnesses) {
      auto it = witnesses.find(k);
      if (it == witnesses.end() || w.theta.hi < it->second.theta.hi) witnesses[k] = w;
    }
  }
};

struct SuiteOptions {
  bool legendre = true;  // Legendre, Fatou-Grace, Koksma
  bool bj = true;        // Barbolosi-Jager corollaries, fixed-k theorem, Kuipers-Meulenbeld
  unsigned fixed_k_max = 8;
  double witness_window = 0.02;
};

inline std::vector<WitnessTarget> witness_targets(const SuiteOptions& o) {
  auto half = Rational(BigInt(1), BigInt(2)), two3 = Rational(BigInt(2), BigInt(3)), one = Rational(1);
  std::vector<WitnessTarget> t;
  auto conv = [](const ApproxClass& c) { return c.convergent(); };
  if (o.legendre) {
    t.push_back({"legendre", half, 0, conv});
    t.push_back({"koksma", two3, 0, [](const ApproxClass& c) { return c.convergent() || c.first; }});
    t.push_back({"fatou-grace", one, 0, [](const ApproxClass& c) { return c.convergent() || c.nearest(); }});
  }
  if (o.bj) {
    t.push_back({"bj1(delta=-1)", half, -1, conv});
    t.push_back({"bj1(delta=+1)", two3, +1, conv});
    t.push_back({"bj2(delta=-1)", one, -1, [](const ApproxClass& c) { return c.convergent() || c.first; }});
    t.push_back({"bj3(delta=-1)", two3, -1, [](const ApproxClass& c) { return c.convergent() || c.final; }});
    t.push_back({"bj3(delta=+1)", one, +1, [](const ApproxClass& c) { return c.convergent() || c.final; }});
  }
  return t;
}

namespace detail {

struct PairCtx {
  const RcfExpansion& e;
  const std::string& xname;
  const BigInt& p;
  const BigInt& q;
  const Enclosure& th;
  const ApproxClass& cls;
  std::optional<int> delta;
};

inline std::string pair_input(const PairCtx& c) { return c.xname + " p/q=" + c.p.get_str() + "/" + c.q.get_str(); }

}  // namespace detail

// Checks every implication on one (x, p/q) pair and updates witnesses.
inline void check_pair(const detail::PairCtx& c, const SuiteOptions& o, const std::vector<WitnessTarget>& targets,
                       SuiteReport& rep) {
  const Ratio half(BigInt(1), BigInt(2)), two3(BigInt(2), BigInt(3)), one(BigInt(1), BigInt(1)),
      two(BigInt(2), BigInt(1));
  const Enclosure& th = c.th;
  const ApproxClass& k = c.cls;
  auto fail = [&](const std::string& name) {
    rep.violations.push_back({name, detail::pair_input(c), th, k.label(), "violated"});
  };
  // premise Theta < v: true / false / undecided
  auto lt = [&](const Ratio& v) -> int {
    if (th.hi < v) return 1;
    if (!(th.lo < v)) return 0;
    return -1;
  };
  auto gt = [&](const Ratio& v) -> int {
    if (v < th.lo) return 1;
    if (!(v < th.hi)) return 0;
    return -1;
  };
  auto rule = [&](const std::string& name, int premise, bool conclusion) {
    ++rep.checks[name];
    if (premise < 0) {
      ++rep.undecided;
      return;
    }
    if (premise == 1 && !conclusion) fail(name);
  };
  bool conv = k.convergent();
  if (o.legendre) {
    rule("legendre", lt(half), conv);
    rule("fatou-grace", lt(one), conv || k.nearest());
    rule("koksma", lt(two3), conv || k.first);
  }
  if (o.bj && c.delta) {
    int d = *c.delta;
    if (d == -1) {
      rule("bj1", lt(half), conv);
      rule("bj1", gt(two3), !conv);
      rule("bj2", lt(one), conv || k.first);
      rule("bj2", gt(two), !(conv || k.first));
      rule("bj3", k.final ? 1 : 0, k.first);
      rule("bj3", lt(two3), conv || k.final);
      rule("bj3", gt(one), !(conv || k.final));
    } else {
      rule("bj1", lt(two3), conv);
      rule("bj1", gt(one), !conv);
      rule("bj2", 1, !k.first);
      rule("bj3", lt(one), conv || k.final);
      rule("bj3", gt(two), !(conv || k.nearest()));
    }
  }
  if (o.bj && sgn(c.p) > 0 && c.p < c.q) {
    for (unsigned kk = 1; kk <= o.fixed_k_max; ++kk) {
      Ratio lo(BigInt(kk), BigInt(kk + 1)), hi(BigInt(kk + 1), BigInt(kk + 2));
      int in_band;
      if (!(th.lo < lo) && th.hi < hi) in_band = 1;
      else if (th.hi < lo || !(th.lo < hi)) in_band = 0;
      else in_band = -1;
      bool concl = false;
      if (conv && k.j >= 0) {
        // p/q = p_{i}/q_{i} with a_{i+1} = 1 and a_{i+2} >= k
        auto i = static_cast<std::size_t>(k.j);
        concl = c.e.digit(i + 1) == 1 && c.e.digit(i + 2) >= kk;
      }
      if ((k.first || k.final) && k.a_next && *k.a_next <= kk + 1) concl = true;
      rule("fixed-k", in_band, concl);
    }
  }
  // witnesses: Theta in [c, c + window) with the conclusion failing
  for (const auto& t : targets) {
    if (t.delta != 0 && (!c.delta || *c.delta != t.delta)) continue;
    if (t.conclusion(k)) continue;
    Ratio cval(t.c);
    if (th.lo < cval) continue;
    double gap = th.hi.to_double() - t.c.to_double();
    if (gap >= o.witness_window) continue;
    auto it = rep.witnesses.find(t.name);
    if (it == rep.witnesses.end() || th.hi < it->second.theta.hi)
      rep.witnesses[t.name] = {t.name, detail::pair_input(c), th, k.label(), "witness"};
  }
}

// Kuipers-Meulenbeld sufficient conditions on the nearest mediants of x with denominator <= q_bound
inline void check_km(const RcfExpansion& e, const std::string& xname, const XRange& xr,
                     const std::vector<FareyEntry>& table, SuiteReport& rep) {
  const Ratio one(BigInt(1), BigInt(1));
  for (const auto& fe : table) {
    const auto& c = fe.cls;
    if (!c.mediant() || !c.a_next || *c.a_next < 2) continue;
    auto j = static_cast<std::size_t>(c.j);
    const BigInt& a1 = *c.a_next;
    Enclosure th = theta(xr, fe.p, fe.q);
    auto req = [&](bool cond) {
      ++rep.checks["kuipers-meulenbeld"];
      if (!cond) return;
      if (th.hi < one) return;
      if (th.lo < one) {
        ++rep.undecided;
        return;
      }
      rep.violations.push_back({"kuipers-meulenbeld", xname + " p/q=" + fe.p.get_str() + "/" + fe.q.get_str(), th,
                                c.label(), "violated"});
    };
    BigInt aj = j == 0 ? e.integer_part : e.digit(j);
    if (c.first) req(a1 <= aj + 1);
    if (c.final && e.has_digit(j + 2)) req(a1 <= e.digit(j + 2) + 1);
  }
}

// All reduced p/q with 1 <= q <= q_bound for one x. Pairs outside the band
// |q x - p| < 3/q have Theta >= 3 and, not being Farey convergents, satisfy
// every implication vacuously; they are counted but not evaluated.
inline void theorem_suite_one(const RcfExpansion& e, const std::string& xname, std::uint64_t q_bound,
                              const SuiteOptions& o, SuiteReport& rep) {
  XRange xr = x_range_bits(e, 2 * 64 + 160);
  auto table = farey_table(e, q_bound);
  std::map<std::pair<std::uint64_t, std::uint64_t>, const ApproxClass*> cls;
  for (const auto& fe : table) cls[{to_u64(fe.p), to_u64(fe.q)}] = &fe.cls;
  auto targets = witness_targets(o);
  ApproxClass none;
  double xd = xr.lo.to_double();
  for (std::uint64_t q = 1; q <= q_bound; ++q) {
    // number of reduced p in [0, q]
    std::uint64_t phi = 0;
    for (std::uint64_t p = 0; p <= q; ++p)
      if (std::gcd(p, q) == 1) ++phi;
    rep.pairs += phi;
    double qd = static_cast<double>(q);
    auto plo = static_cast<std::int64_t>(std::floor(qd * xd - 3.0 / qd)) - 1;
    auto phi_ = static_cast<std::int64_t>(std::ceil(qd * xd + 3.0 / qd)) + 1;
    std::vector<std::uint64_t> ps;
    for (std::int64_t p = std::max<std::int64_t>(plo, 0); p <= std::min<std::int64_t>(phi_, static_cast<std::int64_t>(q));
         ++p)
      ps.push_back(static_cast<std::uint64_t>(p));
    for (const auto& fe : table)
      if (fe.q == q) ps.push_back(to_u64(fe.p));
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    for (std::uint64_t p : ps) {
      if (std::gcd(p, q) != 1) continue;
      BigInt P(p), Q(q);
      Enclosure th = theta(xr, P, Q);
      auto it = cls.find({p, q});
      const ApproxClass& k = it == cls.end() ? none : *it->second;
      std::optional<int> delta;
      if (p > 0) delta = signature(xr, P, Q).delta;
      ++rep.evaluated;
      check_pair({e, xname, P, Q, th, k, delta}, o, targets, rep);
    }
  }
  if (o.bj) check_km(e, xname, xr, table, rep);
}

struct NamedX {
  std::string name;
  RcfExpansion e;
};

// periodic-digit grid for optimality witnesses: [0; d1, d2, d3, (1)]
inline std::vector<NamedX> witness_grid() {
  const unsigned long ds[] = {1, 2, 3, 4, 5, 90, 99, 198, 1000};
  std::vector<NamedX> out;
  for (auto a : ds)
    for (auto b : ds)
      for (auto c : ds) {
        auto e = RcfExpansion::periodic(BigInt(0), to_digits({a, b, c}), to_digits({1}));
        out.push_back({e.to_string(), e});
      }
  return out;
}

inline SuiteReport theorem_suite(const std::vector<NamedX>& corpus, std::uint64_t q_bound, SuiteOptions o = {},
                                 bool search_witnesses = true, unsigned threads = 1) {
  if (q_bound < 2) throw DomainError("qBound must be >= 2");
  std::vector<const NamedX*> all;
  for (const auto& x : corpus) all.push_back(&x);
  std::vector<NamedX> grid;
  if (search_witnesses) grid = witness_grid();
  for (const auto& x : grid) all.push_back(&x);
  auto parts = parallel_map(all.size(), threads, [&](std::size_t i) {
    SuiteReport r;
    theorem_suite_one(all[i]->e, all[i]->name, q_bound, o, r);
    return r;
  });
  SuiteReport rep;
  for (const auto& r : parts) rep.merge(r);
  for (const auto& t : witness_targets(o))
    if (!rep.witnesses.count(t.name)) rep.missing_witnesses.push_back(t.name);
  return rep;
}

// ---------------------------------------------------------------------------
// classical inequalities on theta_k = q_k^2 |x - p_k/q_k|

struct ClassicalReport {
  std::uint64_t checked = 0;
  std::uint64_t undecided = 0;
  std::map<std::string, std::uint64_t> violations;
  std::vector<std::string> details;

  std::uint64_t total_violations() const {
    std::uint64_t t = 0;
    for (auto& [k, v] : violations) t += v;
    return t;
  }
};

inline ClassicalReport classical_inequalities(const RcfExpansion& e, std::size_t n) {
  if (n < 1) throw DomainError("classical_inequalities needs n >= 1");
  // periodic x: Theta_k sits within about q_k^-2 of its limit, so resolve well past q_k^2
  XRange xr = e.is_periodic() ? x_range(e, e.digits.size() + 64 * e.period.size() + 3 * (n + 2)) : x_range(e);
  auto cv = rcf_convergents(e, n + 1);  // indices -1 .. n+1
  std::vector<Enclosure> th;
  for (std::size_t k = 0; k <= n + 1; ++k) th.push_back(theta(xr, cv[k + 1].p, cv[k + 1].q));
  ClassicalReport rep;
  rep.violations = {{"vahlen", 0}, {"borel", 0}, {"bagemihl-mclaughlin", 0}, {"tong", 0}};
  // v^2 * m against 1 for v = N / D
  auto sq_cmp = [](const Ratio& v, const BigInt& m) {
    BigInt l = v.num * v.num * m, r = v.den * v.den;
    return cmp(l, r);
  };
  auto verdict = [&](const std::string& name, std::size_t k, bool holds, bool fails) {
    ++rep.checked;
    if (holds) return;
    if (fails) {
      ++rep.violations[name];
      rep.details.push_back(name + " at k=" + std::to_string(k));
    } else {
      ++rep.undecided;
    }
  };
  const Ratio half(BigInt(1), BigInt(2));
  for (std::size_t k = 1; k <= n; ++k) {
    const Enclosure &a = th[k - 1], &b = th[k], &c = th[k + 1];
    verdict("vahlen", k, a.hi < half || b.hi < half, !(a.lo < half) && !(b.lo < half));
    BigInt five(5);
    verdict("borel", k, sq_cmp(a.hi, five) <= 0 || sq_cmp(b.hi, five) <= 0 || sq_cmp(c.hi, five) <= 0,
            sq_cmp(a.lo, five) > 0 && sq_cmp(b.lo, five) > 0 && sq_cmp(c.lo, five) > 0);
    BigInt ak = e.digit(k + 1);
    BigInt m = ak * ak + 4;
    verdict("bagemihl-mclaughlin", k, sq_cmp(a.hi, m) < 0 || sq_cmp(b.hi, m) < 0 || sq_cmp(c.hi, m) < 0,
            sq_cmp(a.lo, m) >= 0 && sq_cmp(b.lo, m) >= 0 && sq_cmp(c.lo, m) >= 0);
    verdict("tong", k, sq_cmp(a.lo, m) > 0 || sq_cmp(b.lo, m) > 0 || sq_cmp(c.lo, m) > 0,
            sq_cmp(a.hi, m) <= 0 && sq_cmp(b.hi, m) <= 0 && sq_cmp(c.hi, m) <= 0);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// consecutive coefficients (Theta_n, Theta_{n+1}) as a function of the induced point

enum class PsiVariant { H1, Omega, H1H2V1 };

inline std::pair<Enclosure, Enclosure> psi_map(PsiVariant v, const PointInOmega& p,
                                               std::optional<std::uint64_t> strip = std::nullopt) {
  const Rational one(1), half(BigInt(1), BigInt(2)), third(BigInt(1), BigInt(3));
  const Rational& y = p.y;
  if (p.x_lo.is_zero() && y.is_zero()) throw DomainError("psi undefined at (0,0)");
  enum class Br { XY, OneMinusX, General } br;
  std::uint64_t a = 1;
  auto x_above_half = [&]() -> int {
    if (p.x_exact()) return p.x_lo > half ? 1 : 0;
    if (!(p.x_lo < half)) return 1;
    if (!(half < p.x_hi)) return 0;
    return -1;
  };
  switch (v) {
    case PsiVariant::H1:
      if (!(half < y)) throw DomainError("point not in H1");
      br = Br::XY;
      break;
    case PsiVariant::Omega: {
      int s = x_above_half();
      if (s < 0) throw PrecisionError("x enclosure straddles 1/2");
      br = s ? Br::XY : Br::OneMinusX;
      break;
    }
    case PsiVariant::H1H2V1: {
      int s = x_above_half();
      if (s < 0) throw PrecisionError("x enclosure straddles 1/2");
      if (s) {
        br = Br::XY;
      } else if (half < y) {
        br = Br::OneMinusX;
      } else if (third < y) {
        if (!strip) {
          // x in V_a iff floor(1/x) = a
          if (p.x_exact()) {
            a = to_u64(p.x_lo.inverse().floor());
          } else {
            BigInt lo_a = p.x_hi.inverse().floor();
            Rational inv_lo = p.x_lo.inverse();
            BigInt hi_a = inv_lo.floor();
            if (Rational(hi_a, BigInt(1)) == inv_lo) hi_a -= 1;
            if (lo_a != hi_a) throw PrecisionError("strip index undecidable");
            a = to_u64(lo_a);
          }
        } else {
          a = *strip;
        }
        if (a < 2) throw DomainError("point not in V_a & H2 with a > 1");
        br = Br::General;
      } else {
        throw DomainError("point outside H1|H2|V1");
      }
      break;
    }
  }
  auto at = [&](const Rational& x) -> std::pair<Rational, Rational> {
    Rational D = x + y - x * y;
    if (D.is_zero()) throw DomainError("psi undefined at (0,0)");
    Rational first = (one - y) / D;
    Rational second;
    switch (br) {
      case Br::XY: second = x * y / D; break;
      case Br::OneMinusX: second = (one - x) / D; break;
      case Br::General: {
        Rational am1(static_cast<long>(a - 1)), am2(static_cast<long>(a - 2));
        second = (one - am1 * x) * (one + am2 * y) / D;
        break;
      }
    }
    return {first, second};
  };
  auto [f1, s1] = at(p.x_lo);
  if (p.x_exact()) return {Enclosure(Ratio(f1)), Enclosure(Ratio(s1))};
  auto [f2, s2] = at(p.x_hi);
  return {Enclosure(Ratio(f1), Ratio(f2)), Enclosure(Ratio(s1), Ratio(s2))};
}

// ---------------------------------------------------------------------------
// Theta along one block: p_{j-1}/q_{j-1}, the mediants, and the closing p_j/q_j

struct BlockReport {
  bool applicable = false;
  std::uint64_t a = 0;
  std::vector<Enclosure> values;  // index lambda = 0 .. a (a: closing convergent)
  Rational upper_bound;
  Rational max_lower_bound;
  std::vector<std::string> violations;
  std::uint64_t undecided = 0;
};

inline BlockReport block_extrema(const RcfExpansion& e, std::size_t j, const XRange& xr) {
  BlockReport rep;
  auto cv = rcf_convergents(e, j + 1);
  std::uint64_t a = to_u64(e.digit(j + 1));
  rep.a = a;
  if (a < 2) return rep;
  rep.applicable = true;
  const BigInt &pm = cv[j].p, &qm = cv[j].q, &pc = cv[j + 1].p, &qc = cv[j + 1].q;
  for (std::uint64_t lam = 0; lam <= a; ++lam) {
    if (lam == a) {
      rep.values.push_back(theta(xr, pc, qc));
    } else {
      rep.values.push_back(theta(xr, pc * lam + pm, qc * lam + qm));
    }
  }
  Rational A(static_cast<long>(a));
  if (a % 2 == 0) {
    rep.upper_bound = (A + Rational(2)) / Rational(4);
    rep.max_lower_bound = A / Rational(4);
  } else {
    rep.upper_bound = (A + Rational(1)) * (A + Rational(3)) / (Rational(4) * (A + Rational(2)));
    rep.max_lower_bound = (A * A - Rational(1)) / (Rational(4) * A);
  }
  bool skip0 = j == 0;  // 1/0 excluded
  auto name = [&](std::uint64_t l) { return "j=" + std::to_string(j) + " lambda=" + std::to_string(l); };
  auto strictly_less = [&](std::uint64_t l1, std::uint64_t l2, const char* what) {
    const Enclosure &u = rep.values[l1], &w = rep.values[l2];
    if (u.hi < w.lo) return;
    if (!(u.lo < w.hi)) rep.violations.push_back(std::string(what) + " at " + name(l1));
    else ++rep.undecided;
  };
  std::uint64_t up = a / 2, down = (a + 1) / 2;
  for (std::uint64_t l = skip0 ? 1 : 0; l < up; ++l) strictly_less(l, l + 1, "increase");
  for (std::uint64_t l = down; l < a; ++l) strictly_less(l + 1, l, "decrease");
  Ratio ub(rep.upper_bound), lb(rep.max_lower_bound), zero(BigInt(0), BigInt(1));
  bool max_ok = false, max_undecided = false;
  for (std::uint64_t l = skip0 ? 1 : 0; l <= a; ++l) {
    const Enclosure& v = rep.values[l];
    if (!(zero < v.lo) || !(v.hi < ub)) {
      if (v.hi < zero || !(v.lo < ub) || (v.lo == zero && v.hi == zero))
        rep.violations.push_back("bound at " + name(l));
      else
        ++rep.undecided;
    }
    if (lb < v.lo) max_ok = true;
    else if (lb < v.hi) max_undecided = true;
  }
  if (!max_ok) {
    if (max_undecided) ++rep.undecided;
    else rep.violations.push_back("maximum lower bound at j=" + std::to_string(j));
  }
  return rep;
}

inline BlockReport block_extrema(const RcfExpansion& e, std::size_t j) { return block_extrema(e, j, x_range(e)); }

}  // namespace farey
