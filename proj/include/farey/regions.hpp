#pragma once

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "farey_dynamics.hpp"
#include "rational.hpp"

namespace farey {

enum class Membership { In, Out, BoundaryUncertain };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::In: return "In";
    case Membership::Out: return "Out";
    default: return "BoundaryUncertain";
  }
}

// h(x, y) = (1 - y) / (x + y - xy) at a single exact point
inline Ratio h_exact(const Rational& x, const Rational& y) {
  // with x = P/Q, y = Y/W: h = (W - Y) Q / (P (W - Y) + Y Q)
  const BigInt &P = x.num(), &Q = x.den(), &Y = y.num(), &W = y.den();
  BigInt s = W - Y;
  BigInt den = P * s + Y * Q;
  if (sgn(den) == 0) throw DomainError("h is undefined at (0,0)");
  return Ratio(s * Q, den);
}

// h is decreasing in x, so the enclosure endpoints map to the image endpoints
inline Enclosure h_value(const PointInOmega& p) {
  if (p.x_exact()) return Enclosure(h_exact(p.x_lo, p.y));
  return Enclosure::ordered(h_exact(p.x_hi, p.y), h_exact(p.x_lo, p.y));
}

inline double h_double(double x, double y) { return (1.0 - y) / (x + y - x * y); }

// inclusive ranges of block offsets lambda
using LambdaRanges = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

namespace detail {

inline LambdaRanges merge_ranges(LambdaRanges v) {
  std::sort(v.begin(), v.end());
  LambdaRanges out;
  for (auto& r : v) {
    if (!out.empty() && r.first <= out.back().second + 1) {
      out.back().second = std::max(out.back().second, r.second);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

inline LambdaRanges intersect_ranges(const LambdaRanges& a, const LambdaRanges& b) {
  LambdaRanges out;
  std::size_t i = 0, k = 0;
  while (i < a.size() && k < b.size()) {
    std::uint64_t lo = std::max(a[i].first, b[k].first);
    std::uint64_t hi = std::min(a[i].second, b[k].second);
    if (lo <= hi) out.push_back({lo, hi});
    if (a[i].second < b[k].second) ++i; else ++k;
  }
  return out;
}

// [lo, hi] from real bounds, widened, clamped to [0, a-1]
inline LambdaRanges real_range(long double lo, long double hi, std::uint64_t a) {
  long double slack = 2.0L + 1e-9L * static_cast<long double>(a);
  lo -= slack;
  hi += slack;
  long double top = static_cast<long double>(a - 1);
  if (hi < 0 || lo > top) return {};
  std::uint64_t l = lo <= 0 ? 0 : static_cast<std::uint64_t>(std::floor(lo));
  std::uint64_t h = hi >= top ? a - 1 : static_cast<std::uint64_t>(std::ceil(hi));
  if (l > h) return {};
  return {{l, h}};
}

// rectangle [x1,x2] x [y1,y2] measure, exact ratio then one rounding
inline double rect_measure(const Rational& x1, const Rational& x2, const Rational& y1, const Rational& y2) {
  if (!(x1 < x2) || !(y1 < y2)) return 0.0;
  auto D = [](const Rational& x, const Rational& y) { return x + y - x * y; };
  Rational num = D(x1, y2) * D(x2, y1);
  Rational den = D(x2, y2) * D(x1, y1);
  if (den.is_zero()) return std::numeric_limits<double>::infinity();
  Rational t = (num - den) / den;
  return std::log1p(t.to_double());
}

// int_a^b dy / (x + y - xy)^2
inline double inner_integral(double x, double a, double b) {
  return (b - a) / ((x + a - x * a) * (x + b - x * b));
}

// level curve h = z as y = f(x, z)
inline double level_curve(double x, double z) {
  double n = 1.0 - x * z;
  return n / (n + z);
}

// measure of {h <= z} inside [x1,x2] x [y1,y2]
inline double cell_sublevel(double x1, double x2, double y1, double y2, double z) {
  if (z <= 0 || x2 <= x1 || y2 <= y1) return 0.0;
  auto g = [&](double x) {
    double f = level_curve(x, z);
    double a = std::max(y1, f);
    if (a >= y2) return 0.0;
    return inner_integral(x, a, y2);
  };
  std::vector<double> cuts{x1, x2};
  for (double c : {y1, y2}) {
    if (c >= 1.0) continue;
    double xc = (1.0 - c - c * z) / (z * (1.0 - c));
    if (xc > x1 && xc < x2) cuts.push_back(xc);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, cuts[i], cuts[i + 1], 15, 1e-11);
  }
  return total;
}

}  // namespace detail

class Region {
 public:
  enum class Kind { Omega, H, V, Rect, Sub, Union, Inter, Diff };

  struct Node {
    Kind kind = Kind::Omega;
    std::uint64_t k = 0;                  // strip index for H / V
    Rational x1{0}, x2{1}, y1{0}, y2{1};  // rectangle geometry for Omega/H/V/Rect
    bool cx1 = true, cx2 = true, cy1 = true, cy2 = true;
    double z = 0;
    std::shared_ptr<const Node> a, b;
  };

  Region() : Region(omega()) {}

  static Region omega() {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Omega;
    return Region(n);
  }
  static Region h_strip(std::uint64_t k) {
    if (k < 1) throw DomainError("strip index must be >= 1");
    auto n = std::make_shared<Node>();
    n->kind = Kind::H;
    n->k = k;
    n->y1 = Rational(BigInt(1), big(k + 1));
    n->y2 = Rational(BigInt(1), big(k));
    n->cy1 = false;
    return Region(n);
  }
  static Region v_strip(std::uint64_t k) {
    if (k < 1) throw DomainError("strip index must be >= 1");
    auto n = std::make_shared<Node>();
    n->kind = Kind::V;
    n->k = k;
    n->x1 = Rational(BigInt(1), big(k + 1));
    n->x2 = Rational(BigInt(1), big(k));
    n->cx1 = false;
    return Region(n);
  }
  static Region rect(Rational x1, Rational x2, Rational y1, Rational y2, bool cx1 = true, bool cx2 = true,
                     bool cy1 = true, bool cy2 = true) {
    Rational zero(0), one(1);
    if (x1 < zero || x2 > one || y1 < zero || y2 > one || x2 < x1 || y2 < y1)
      throw DomainError("rectangle outside Omega");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Rect;
    n->x1 = std::move(x1);
    n->x2 = std::move(x2);
    n->y1 = std::move(y1);
    n->y2 = std::move(y2);
    n->cx1 = cx1;
    n->cx2 = cx2;
    n->cy1 = cy1;
    n->cy2 = cy2;
    return Region(n);
  }
  static Region sublevel(double z) {
    if (!(z >= 0) || !std::isfinite(z)) throw DomainError("sublevel needs finite z >= 0");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Sub;
    n->z = z;
    return Region(n);
  }

  friend Region operator|(const Region& a, const Region& b) { return combine(Kind::Union, a, b); }
  friend Region operator&(const Region& a, const Region& b) { return combine(Kind::Inter, a, b); }
  friend Region operator-(const Region& a, const Region& b) { return combine(Kind::Diff, a, b); }

  const Node& root() const { return *root_; }

  Membership contains(const PointInOmega& p) const {
    Lazy lz{p, false, {}};
    return eval(*root_, lz);
  }

  // offsets lambda in a block with digit a whose closed grid cell
  // [1/(a-lambda+1), 1/(a-lambda)] x [1/(lambda+2), 1/(lambda+1)] may meet the region
  //
  // interior = true: the caller guarantees the orbit point lies in the open cell
  // (0 < q_{j-1} < q_j and a further tail digit exists), so the rectangle bounds are exact
  LambdaRanges candidate_lambdas(std::uint64_t a, bool interior = false) const {
    if (a == 0) return {};
    return candidates(*root_, a, interior);
  }

  double measure() const { return compute_measure(); }

  // measure of S_z intersected with the region
  double sublevel_measure(double z) const {
    if (z < 0) throw DomainError("sublevel_measure needs z >= 0");
    if (z == 0) return 0.0;
    return (*this & sublevel(z)).measure();
  }

  bool is_proper() const {
    double m = measure();
    return m > 0 && std::isfinite(m);
  }

  // inf and sup of h over the region's positive-measure part
  std::pair<double, double> h_range() const {
    Grid g = grid();
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
      for (std::size_t k = 0; k + 1 < g.ys.size(); ++k) {
        double x1 = g.xs[i].to_double(), x2 = g.xs[i + 1].to_double();
        double y1 = g.ys[k].to_double(), y2 = g.ys[k + 1].to_double();
        double hmin = h_double(x2, y2);
        double hmax = (x1 == 0 && y1 == 0) ? std::numeric_limits<double>::infinity() : h_double(x1, y1);
        for (std::size_t b = 0; b <= g.zs.size(); ++b) {
          if (!cell_in(*root_, g, i, k, b)) continue;
          double zl = b == 0 ? 0.0 : g.zs[b - 1];
          double zh = b == g.zs.size() ? std::numeric_limits<double>::infinity() : g.zs[b];
          double l = std::max(hmin, zl), h = std::min(hmax, zh);
          if (l >= h) continue;
          lo = std::min(lo, l);
          hi = std::max(hi, h);
        }
      }
    }
    return {lo, hi};
  }

  std::string to_string() const { return print(*root_); }

 private:
  explicit Region(std::shared_ptr<const Node> n) : root_(std::move(n)) {}

  static Region combine(Kind k, const Region& a, const Region& b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = a.root_;
    n->b = b.root_;
    return Region(n);
  }

  struct Lazy {
    const PointInOmega& p;
    bool have_h = false;
    Enclosure h;
    const Enclosure& hv() {
      if (!have_h) {
        h = h_value(p);
        have_h = true;
      }
      return h;
    }
  };

  static Membership both(Membership a, Membership b) {
    if (a == Membership::Out || b == Membership::Out) return Membership::Out;
    if (a == Membership::In && b == Membership::In) return Membership::In;
    return Membership::BoundaryUncertain;
  }
  static Membership either(Membership a, Membership b) {
    if (a == Membership::In || b == Membership::In) return Membership::In;
    if (a == Membership::Out && b == Membership::Out) return Membership::Out;
    return Membership::BoundaryUncertain;
  }
  static Membership negate(Membership a) {
    if (a == Membership::In) return Membership::Out;
    if (a == Membership::Out) return Membership::In;
    return a;
  }

  // exact value v against an edge pair
  static bool inside(const Rational& v, const Rational& lo, bool clo, const Rational& hi, bool chi) {
    bool okl = clo ? !(v < lo) : (lo < v);
    bool okh = chi ? !(hi < v) : (v < hi);
    return okl && okh;
  }

  static Membership x_member(const PointInOmega& p, const Node& n) {
    if (p.x_exact()) return inside(p.x_lo, n.x1, n.cx1, n.x2, n.cx2) ? Membership::In : Membership::Out;
    // true x lies strictly inside (x_lo, x_hi)
    if (!(p.x_lo < n.x1) && !(n.x2 < p.x_hi)) return Membership::In;
    if (!(n.x1 < p.x_hi) || !(p.x_lo < n.x2)) return Membership::Out;
    return Membership::BoundaryUncertain;
  }

  static Membership eval(const Node& n, Lazy& lz) {
    switch (n.kind) {
      case Kind::Omega:
      case Kind::H:
      case Kind::V:
      case Kind::Rect: {
        if (!inside(lz.p.y, n.y1, n.cy1, n.y2, n.cy2)) return Membership::Out;
        return x_member(lz.p, n);
      }
      case Kind::Sub: {
        const Enclosure& h = lz.hv();
        if (lz.p.x_exact()) return compare(h.lo, n.z) <= 0 ? Membership::In : Membership::Out;
        if (compare(h.hi, n.z) <= 0) return Membership::In;
        if (compare(h.lo, n.z) >= 0) return Membership::Out;
        return Membership::BoundaryUncertain;
      }
      case Kind::Union: {
        Membership a = eval(*n.a, lz);
        if (a == Membership::In) return a;
        return either(a, eval(*n.b, lz));
      }
      case Kind::Inter: {
        Membership a = eval(*n.a, lz);
        if (a == Membership::Out) return a;
        return both(a, eval(*n.b, lz));
      }
      case Kind::Diff: {
        Membership a = eval(*n.a, lz);
        if (a == Membership::Out) return a;
        return both(a, negate(eval(*n.b, lz)));
      }
    }
    return Membership::BoundaryUncertain;
  }

  // open cells (1/(m+1), 1/m) x (1/(lambda+2), 1/(lambda+1)), m = a - lambda, meeting the node's rectangle
  static LambdaRanges open_cell_range(const Node& n, std::uint64_t a) {
    if (n.y2.sign() <= 0 || n.x2.sign() <= 0) return {};
    const BigInt A = big(a);
    BigInt lo(0), hi = A - 1;
    auto raise = [&](const BigInt& v) { if (v > lo) lo = v; };
    auto lower = [&](const BigInt& v) { if (v < hi) hi = v; };
    // lambda > 1/y2 - 2, lambda < 1/y1 - 1
    raise((Rational(1) / n.y2 - Rational(2)).floor() + 1);
    if (n.y1.sign() > 0) lower(-(Rational(1) - Rational(1) / n.y1).floor() - 1);
    // m > 1/x2 - 1, m < 1/x1
    lower(A - ((Rational(1) / n.x2 - Rational(1)).floor() + 1));
    if (n.x1.sign() > 0) raise(A + (Rational(-1) / n.x1).floor() + 1);
    if (lo > hi) return {};
    return {{to_u64(lo), to_u64(hi)}};
  }

  static LambdaRanges candidates(const Node& n, std::uint64_t a, bool interior) {
    using LD = long double;
    const LD A = static_cast<LD>(a);
    switch (n.kind) {
      case Kind::Omega: return {{0, a - 1}};
      case Kind::H:
      case Kind::V:
      case Kind::Rect: {
        if (interior) return open_cell_range(n, a);
        LD x1 = n.x1.to_double(), x2 = n.x2.to_double(), y1 = n.y1.to_double(), y2 = n.y2.to_double();
        if (y2 <= 0 || x2 <= 0) return {};
        LD lo = 1.0L / y2 - 2.0L;
        LD hi = y1 > 0 ? 1.0L / y1 - 1.0L : A;
        // m = a - lambda in [1/x2 - 1, 1/x1]
        hi = std::min(hi, A - (1.0L / x2 - 1.0L));
        if (x1 > 0) lo = std::max(lo, A - 1.0L / x1);
        return detail::real_range(lo, hi, a);
      }
      case Kind::Sub: {
        // min of h over the closed cell is lambda (a - lambda) / a
        LD z = n.z;
        LD disc = A * A - 4.0L * z * A;
        if (disc <= 0) return {{0, a - 1}};
        LD r = std::sqrt(disc);
        LD lm = (A - r) / 2.0L, lp = (A + r) / 2.0L;
        LambdaRanges out = detail::real_range(-1.0L, lm, a);
        for (auto& q : detail::real_range(lp, A, a)) out.push_back(q);
        return detail::merge_ranges(out);
      }
      case Kind::Union: {
        LambdaRanges l = candidates(*n.a, a, interior);
        for (auto& q : candidates(*n.b, a, interior)) l.push_back(q);
        return detail::merge_ranges(l);
      }
      case Kind::Inter:
        return detail::intersect_ranges(candidates(*n.a, a, interior), candidates(*n.b, a, interior));
      case Kind::Diff: return candidates(*n.a, a, interior);
    }
    return {{0, a - 1}};
  }

  // rectangle-decomposed normal form: grid of all rational edges, level bands of all SUB nodes
  struct Grid {
    std::vector<Rational> xs, ys;
    std::vector<double> zs;
  };

  static void collect(const Node& n, Grid& g) {
    switch (n.kind) {
      case Kind::Omega:
      case Kind::H:
      case Kind::V:
      case Kind::Rect:
        g.xs.push_back(n.x1);
        g.xs.push_back(n.x2);
        g.ys.push_back(n.y1);
        g.ys.push_back(n.y2);
        break;
      case Kind::Sub: g.zs.push_back(n.z); break;
      default:
        collect(*n.a, g);
        collect(*n.b, g);
    }
  }

  Grid grid() const {
    Grid g;
    g.xs = {Rational(0), Rational(1)};
    g.ys = {Rational(0), Rational(1)};
    collect(*root_, g);
    auto uniq = [](auto& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(g.xs);
    uniq(g.ys);
    uniq(g.zs);
    return g;
  }

  // does the interior of grid cell (i, k) within level band b belong to node n
  static bool cell_in(const Node& n, const Grid& g, std::size_t i, std::size_t k, std::size_t b) {
    switch (n.kind) {
      case Kind::Omega:
      case Kind::H:
      case Kind::V:
      case Kind::Rect:
        return !(g.xs[i] < n.x1) && !(n.x2 < g.xs[i + 1]) && !(g.ys[k] < n.y1) && !(n.y2 < g.ys[k + 1]);
      case Kind::Sub: {
        // band b is (zs[b-1], zs[b]]
        auto pos = static_cast<std::size_t>(std::lower_bound(g.zs.begin(), g.zs.end(), n.z) - g.zs.begin());
        return b <= pos;
      }
      case Kind::Union: return cell_in(*n.a, g, i, k, b) || cell_in(*n.b, g, i, k, b);
      case Kind::Inter: return cell_in(*n.a, g, i, k, b) && cell_in(*n.b, g, i, k, b);
      case Kind::Diff: return cell_in(*n.a, g, i, k, b) && !cell_in(*n.b, g, i, k, b);
    }
    return false;
  }

  double compute_measure() const {
    Grid g = grid();
    const std::size_t nb = g.zs.size();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
      for (std::size_t k = 0; k + 1 < g.ys.size(); ++k) {
        // upto[b]: measure of {h <= zs[b]} in the cell, upto[nb]: whole cell
        std::vector<double> upto(nb + 1, std::numeric_limits<double>::quiet_NaN());
        auto level = [&](std::size_t b) {
          if (std::isnan(upto[b])) {
            upto[b] = b == nb ? detail::rect_measure(g.xs[i], g.xs[i + 1], g.ys[k], g.ys[k + 1])
                              : detail::cell_sublevel(g.xs[i].to_double(), g.xs[i + 1].to_double(),
                                                      g.ys[k].to_double(), g.ys[k + 1].to_double(), g.zs[b]);
          }
          return upto[b];
        };
        for (std::size_t b = 0; b <= nb; ++b) {
          if (!cell_in(*root_, g, i, k, b)) continue;
          double hi = level(b);
          double piece = std::isinf(hi) ? hi : hi - (b == 0 ? 0.0 : level(b - 1));
          if (piece > 0) total += piece;
        }
      }
    }
    return total;
  }

  static std::string print(const Node& n) {
    switch (n.kind) {
      case Kind::Omega: return "OMEGA";
      case Kind::H: return "H" + std::to_string(n.k);
      case Kind::V: return "V" + std::to_string(n.k);
      case Kind::Rect:
        return "RECT(" + n.x1.to_string() + "," + n.x2.to_string() + "," + n.y1.to_string() + "," +
               n.y2.to_string() + ")";
      case Kind::Sub: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "SUB(%.17g)", n.z);
        return buf;
      }
      case Kind::Union: return "(" + print(*n.a) + "|" + print(*n.b) + ")";
      case Kind::Inter: return "(" + print(*n.a) + "&" + print(*n.b) + ")";
      case Kind::Diff: return "(" + print(*n.a) + "\\" + print(*n.b) + ")";
    }
    return "?";
  }

  std::shared_ptr<const Node> root_;
};

// Grammar: expr := term (('|' | '\') term)* ; term := atom ('&' atom)* ;
// atom := H<k> | V<a> | RECT(x1,x2,y1,y2) | SUB(z) | OMEGA | '(' expr ')'
class RegionParser {
 public:
  explicit RegionParser(std::string_view s) : s_(s) {}

  Region parse() {
    Region r = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return r;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  Region expr() {
    Region r = term();
    for (;;) {
      if (eat('|')) r = r | term();
      else if (eat('\\')) r = r - term();
      else return r;
    }
  }
  Region term() {
    Region r = atom();
    while (eat('&')) r = r & atom();
    return r;
  }

  std::uint64_t integer() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("expected integer", pos_);
    std::string t(s_.substr(start, pos_ - start));
    if (t.size() > 19) throw ParseError("strip index too large", start);
    return std::stoull(t);
  }

  std::string literal() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/' ||
                                s_[pos_] == '.' || s_[pos_] == '-' || s_[pos_] == '+' || s_[pos_] == 'e' ||
                                s_[pos_] == 'E'))
      ++pos_;
    if (start == pos_) throw ParseError("expected number", pos_);
    return std::string(s_.substr(start, pos_ - start));
  }

  Rational rational() {
    std::size_t at = pos_;
    std::string t = literal();
    try {
      return Rational::parse(t);
    } catch (const FareyError&) {
      throw ParseError("malformed rational '" + t + "'", at);
    }
  }

  bool keyword(std::string_view kw) {
    skip();
    if (s_.substr(pos_, kw.size()) == kw) {
      pos_ += kw.size();
      return true;
    }
    return false;
  }

  Region atom() {
    skip();
    std::size_t at = pos_;
    if (eat('(')) {
      Region r = expr();
      expect(')');
      return r;
    }
    try {
      if (keyword("OMEGA")) return Region::omega();
      if (keyword("RECT")) {
        expect('(');
        Rational x1 = rational();
        expect(',');
        Rational x2 = rational();
        expect(',');
        Rational y1 = rational();
        expect(',');
        Rational y2 = rational();
        expect(')');
        return Region::rect(x1, x2, y1, y2);
      }
      if (keyword("SUB")) {
        expect('(');
        std::size_t zat = pos_;
        std::string t = literal();
        double z;
        try {
          z = t.find('/') != std::string::npos ? Rational::parse(t).to_double() : std::stod(t);
        } catch (const std::exception&) {
          throw ParseError("malformed level '" + t + "'", zat);
        }
        expect(')');
        return Region::sublevel(z);
      }
      if (keyword("H")) return Region::h_strip(integer());
      if (keyword("V")) return Region::v_strip(integer());
    } catch (const ParseError&) {
      throw;
    } catch (const DomainError& e) {
      throw ParseError(e.what(), at);
    }
    throw ParseError("expected region", at);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline Region parse_region(std::string_view text) { return RegionParser(text).parse(); }

}  // namespace farey
