#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "farey/induced.hpp"
#include "farey/metrics.hpp"
#include "farey/sampling.hpp"

using namespace farey;

namespace {

Rational R(long p, long q) { return Rational(BigInt(p), BigInt(q)); }

RcfExpansion prefix(std::initializer_list<unsigned long> ds) {
  return RcfExpansion::prefix(BigInt(0), to_digits(ds));
}

const RcfExpansion kGolden = RcfExpansion::periodic(BigInt(0), {}, to_digits({1}));

struct FamilyCase {
  Family f;
  FamilyParams p;
};

std::vector<FamilyCase> closed_form_cases() {
  std::vector<FamilyCase> v;
  v.push_back({Family::CorI, {}});
  for (std::uint64_t l : {1u, 2u, 4u}) {
    FamilyParams p;
    p.lambda = l;
    v.push_back({Family::CorII, p});
  }
  for (std::uint64_t a : {1u, 2u, 5u}) {
    FamilyParams p;
    p.a = a;
    v.push_back({Family::CorIII, p});
    v.push_back({Family::CorIV, p});
  }
  for (double z0 : {0.4, 1.0, 2.5}) {
    FamilyParams p;
    p.z0 = z0;
    v.push_back({Family::CorV, p});
  }
  for (auto [a, l] : std::vector<std::pair<int, int>>{{3, 1}, {2, 1}, {2, 0}, {4, 2}, {5, 1}, {5, 3}, {6, 0}}) {
    FamilyParams p;
    p.a = static_cast<std::uint64_t>(a);
    p.lambda = static_cast<std::uint64_t>(l);
    v.push_back({Family::CorVI, p});
  }
  for (auto [L, A] : std::vector<std::pair<int, int>>{{1, 1}, {0, 1}, {2, 1}, {1, 3}, {3, 2}}) {
    FamilyParams p;
    p.Lambda = static_cast<std::uint64_t>(L);
    p.A = static_cast<std::uint64_t>(A);
    v.push_back({Family::CorVII, p});
  }
  return v;
}

double inverse_cdf(const CdfModel& m, double u) {
  double lo = m.z_min, hi = m.z_max;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (m(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Theta, Examples) {
  auto t = theta(R(2, 7), BigInt(1), BigInt(3));
  EXPECT_TRUE(t.exact());
  EXPECT_EQ(t.lo.reduced(), R(3, 7));
  EXPECT_EQ(theta(R(2, 7), BigInt(0), BigInt(1)).lo.reduced(), R(2, 7));
  EXPECT_EQ(theta(R(2, 7), BigInt(1), BigInt(0)).lo.reduced(), Rational(0));
  EXPECT_THROW(theta(R(2, 7), BigInt(2), BigInt(6)), DomainError);
}

TEST(Theta, EnclosureContainsTrueValue) {
  Rational x = R(832040, 1346269 * 3 + 7);
  auto full = rcf_expand(x);
  ASSERT_GT(full.digits.size(), 10u);
  auto cut = RcfExpansion::prefix(full.integer_part, {full.digits.begin(), full.digits.begin() + 8});
  for (long q = 1; q < 40; ++q)
    for (long p = 0; p <= q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      auto exact = theta(x, BigInt(p), BigInt(q));
      auto enc = theta(cut, BigInt(p), BigInt(q));
      EXPECT_TRUE(enc.contains(exact.lo)) << p << "/" << q;
    }
}

TEST(CdfClosedForm, Examples) {
  auto m = cdf_closed_form(Family::CorI, {});
  EXPECT_NEAR(m(0.25), 0.25 / std::log(2.0), 1e-15);
  EXPECT_NEAR(m(0.25), 0.36067, 1e-5);
  EXPECT_EQ(m(1.0), 1.0);
  EXPECT_EQ(m(-1.0), 0.0);
  FamilyParams p;
  p.a = 3;
  p.lambda = 1;
  auto v = cdf_closed_form(Family::CorVI, p);
  EXPECT_NEAR(v.z_min, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(v.z_max, 6.0 / 5.0, 1e-15);
  EXPECT_NEAR(v.C, std::log(16.0 / 15.0), 1e-15);
}

TEST(CdfClosedForm, InvalidParameters) {
  FamilyParams p;
  p.lambda = 0;
  EXPECT_THROW(cdf_closed_form(Family::CorII, p), DomainError);
  p.a = 0;
  EXPECT_THROW(cdf_closed_form(Family::CorIII, p), DomainError);
  p.a = 3;
  p.lambda = 3;
  EXPECT_THROW(cdf_closed_form(Family::CorVI, p), DomainError);
  p.A = 0;
  EXPECT_THROW(cdf_closed_form(Family::CorVII, p), DomainError);
  p.z0 = -1;
  EXPECT_THROW(cdf_closed_form(Family::CorV, p), DomainError);
  EXPECT_THROW(parse_family("cor-ix"), DomainError);
}

TEST(CdfClosedForm, EndpointsMonotoneAndConstant) {
  for (const auto& c : closed_form_cases()) {
    auto m = cdf_closed_form(c.f, c.p);
    std::string tag = family_name(c.f);
    EXPECT_NEAR(m(m.z_min), 0.0, 1e-12) << tag;
    EXPECT_NEAR(m(m.z_max), 1.0, 1e-12) << tag;
    // value just below z_max approaches 1 from the pieces themselves
    EXPECT_NEAR(m(m.z_max - 1e-12), 1.0, 1e-9) << tag;
    double prev = -1;
    for (int i = 0; i <= 10000; ++i) {
      double z = m.z_min + (m.z_max - m.z_min) * i / 10000.0;
      double f = m(z);
      EXPECT_GE(f, prev - 1e-13) << tag << " z=" << z;
      prev = f;
    }
    // continuity at every breakpoint
    for (double b : m.breakpoints()) {
      if (b <= m.z_min || b >= m.z_max) continue;
      EXPECT_NEAR(m(b - 1e-10), m(b + 1e-10), 1e-8) << tag << " b=" << b;
    }
    Region r = family_region(c.f, c.p);
    EXPECT_NEAR(m.C, r.measure(), 1e-12) << tag;
  }
}

TEST(CdfNumeric, MatchesClosedForms) {
  for (const auto& c : closed_form_cases()) {
    auto cf = cdf_closed_form(c.f, c.p);
    auto num = cdf_numeric(family_region(c.f, c.p));
    std::string tag = family_name(c.f);
    EXPECT_NEAR(num.z_min, cf.z_min, 1e-12) << tag;
    EXPECT_NEAR(num.z_max, cf.z_max, 1e-12) << tag;
    double worst = 0;
    for (int i = 0; i <= 1000; ++i) {
      double z = cf.z_min + (cf.z_max - cf.z_min) * i / 1000.0;
      worst = std::max(worst, std::abs(num(z) - cf(z)));
    }
    EXPECT_LT(worst, 1e-6) << tag;
  }
}

TEST(CdfNumeric, Examples) {
  auto h1 = cdf_numeric(Region::h_strip(1));
  auto ci = cdf_closed_form(Family::CorI, {});
  for (int i = 0; i <= 1000; ++i) EXPECT_NEAR(h1(i / 1000.0), ci(i / 1000.0), 1e-6);
  EXPECT_EQ(h1(0.0), 0.0);
  EXPECT_EQ(h1(-3.0), 0.0);
  FamilyParams p;
  p.lambda = 1;
  auto h2 = cdf_numeric(Region::h_strip(2));
  auto c2 = cdf_closed_form(Family::CorII, p);
  for (int i = 0; i <= 1000; ++i) {
    double z = 0.5 + 1.5 * i / 1000.0;
    EXPECT_NEAR(h2(z), c2(z), 1e-6);
  }
  EXPECT_THROW(cdf_numeric(Region::omega()), DomainError);
}

TEST(Lenstra, Constants) {
  EXPECT_DOUBLE_EQ(lenstra_constant(cdf_closed_form(Family::CorI, {})), 0.5);
  FamilyParams p;
  p.a = 3;
  EXPECT_DOUBLE_EQ(lenstra_constant(cdf_closed_form(Family::CorIII, p)), 3.0);
  p.Lambda = 1;
  p.A = 1;
  EXPECT_NEAR(lenstra_constant(cdf_closed_form(Family::CorVII, p)), 2.0 / 3.0, 1e-15);
  p.z0 = 0.4;
  EXPECT_DOUBLE_EQ(lenstra_constant(cdf_closed_form(Family::CorV, p)), 0.4);
  p.lambda = 1;
  EXPECT_THROW(lenstra_constant(cdf_closed_form(Family::CorII, p)), DomainError);
  EXPECT_NEAR(lenstra_constant(cdf_numeric(Region::h_strip(1))), 0.5, 0.02);
}

TEST(Ks, SingleSampleAndEmpty) {
  auto m = cdf_closed_form(Family::CorI, {});
  for (double z : {0.1, 0.3, 0.5, 0.8}) {
    double F = m(z);
    EXPECT_NEAR(ks_distance(std::vector<double>{z}, m), std::max(F, 1 - F), 1e-15);
  }
  EXPECT_THROW(ks_distance(std::vector<double>{}, m), DomainError);
}

TEST(Ks, NullCalibrationByInverseSampling) {
  auto m = cdf_closed_form(Family::CorI, {});
  const int n = 100000, trials = 20;
  int pass = 0;
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> U(0, 1);
  for (int t = 0; t < trials; ++t) {
    std::vector<double> s(n);
    for (auto& v : s) v = inverse_cdf(m, U(g));
    if (ks_distance(s, m) <= 1.36 / std::sqrt(static_cast<double>(n))) ++pass;
  }
  // 1.36/sqrt(n) is the 95% point of the null distribution
  EXPECT_GE(pass, 16);
}

TEST(Classify, Examples) {
  auto e = RcfExpansion::prefix(BigInt(0), to_digits({3, 2, 1, 1, 4, 2}));
  auto c = classify(e, BigInt(1), BigInt(3), BigInt(100));
  EXPECT_EQ(c.kind, ApproxKind::Convergent);
  EXPECT_EQ(c.j, 1);
  auto f = classify(e, BigInt(1), BigInt(2), BigInt(100));
  EXPECT_EQ(f.kind, ApproxKind::FinalMediant);
  EXPECT_TRUE(f.final);
  EXPECT_EQ(f.j, 0);
  EXPECT_EQ(f.lambda, 2u);
  EXPECT_EQ(*f.a_next, 3);
  auto n = classify(e, BigInt(2), BigInt(5), BigInt(5));
  EXPECT_EQ(n.kind, ApproxKind::NotAConvergentOrMediant);
  auto first = classify(e, BigInt(1), BigInt(1), BigInt(5));
  EXPECT_EQ(first.kind, ApproxKind::FirstMediant);
  EXPECT_THROW(classify(e, BigInt(1), BigInt(3), BigInt(2)), DomainError);
  EXPECT_THROW(classify(e, BigInt(2), BigInt(4), BigInt(10)), DomainError);
}

TEST(Classify, FirstAndFinalCoincideForTwo) {
  auto e = prefix({2, 3, 1});
  auto c = classify(e, BigInt(1), BigInt(1), BigInt(10));  // lambda = 1 = a_1 - 1
  EXPECT_TRUE(c.first);
  EXPECT_TRUE(c.final);
  EXPECT_EQ(c.label(), "FirstMediant+FinalMediant");
}

TEST(Classify, AgreesWithFareyTableAndBruteForce) {
  for (std::uint64_t idx = 0; idx < 10; ++idx) {
    auto e = sample_x(61, idx);
    const std::uint64_t D = 300;
    auto table = farey_table(e, D);
    std::set<std::pair<std::uint64_t, std::uint64_t>> in_table;
    for (const auto& fe : table) in_table.insert({to_u64(fe.p), to_u64(fe.q)});
    // the table is exactly the set of Farey convergents u/s with 1 <= s <= D
    std::set<std::pair<std::uint64_t, std::uint64_t>> from_orbit;
    OrbitWalker w(e);
    while (w.q_prev() <= D) {
      BigInt s = w.s();
      if (s >= 1 && s <= D) from_orbit.insert({to_u64(w.u()), to_u64(s)});
      w.step();
    }
    EXPECT_EQ(in_table, from_orbit);
    for (std::uint64_t q = 1; q <= 60; ++q)
      for (std::uint64_t p = 0; p <= q; ++p) {
        if (std::gcd(p, q) != 1) continue;
        auto c = classify(e, BigInt(p), BigInt(q), BigInt(q));
        bool farey = in_table.count({p, q}) > 0;
        EXPECT_EQ(c.kind != ApproxKind::NotAConvergentOrMediant, farey) << p << "/" << q;
      }
  }
}

TEST(Signature, LemmaOverFareyConvergents) {
  for (std::uint64_t idx = 0; idx < 8; ++idx) {
    auto e = sample_x_digits(71, idx, 1200);
    auto xr = x_range(e);
    OrbitWalker w(e);
    for (int n = 0; n <= 2000; ++n) {
      BigInt u = w.u(), s = w.s();
      if (sgn(u) > 0 && sgn(s) > 0) {
        auto sig = signature(xr, u, s);
        bool neg = (w.lambda() == 0 && w.j() > 1 && e.digit(w.j() - 1) == 1) || w.lambda() == 1;
        EXPECT_EQ(sig.delta, neg ? -1 : 1) << "n=" << n << " j=" << w.j() << " lambda=" << w.lambda();
        EXPECT_EQ(sig.delta, sig.eps_depth * sig.eps_side);
      }
      w.step();
    }
  }
}

TEST(Signature, UndefinedCases) {
  auto e = sample_x(1, 2);
  EXPECT_THROW(signature(e, BigInt(0), BigInt(1)), DomainError);
  EXPECT_THROW(signature(e, BigInt(1), BigInt(0)), DomainError);
  EXPECT_THROW(signature(rcf_expand(R(1, 3)), BigInt(1), BigInt(3)), DomainError);
  // enclosure containing p/q
  XRange wide{R(1, 4), R(1, 2), false};
  EXPECT_THROW(signature(wide, BigInt(1), BigInt(3)), PrecisionError);
  // depth(1/1) = 0
  auto s = signature(XRange{R(1, 2), R(1, 2), true}, BigInt(1), BigInt(1));
  EXPECT_EQ(s.eps_depth, 1);
  EXPECT_EQ(s.eps_side, -1);
}

TEST(Psi, Examples) {
  for (auto x : {R(3, 5), R(7, 9), R(51, 100)}) {
    auto [a, b] = psi_map(PsiVariant::Omega, PointInOmega::exact(x, Rational(1)));
    EXPECT_EQ(a.lo.reduced(), Rational(0));
    EXPECT_EQ(b.lo.reduced(), x);
  }
  EXPECT_THROW(psi_map(PsiVariant::Omega, PointInOmega::exact(Rational(0), Rational(0))), DomainError);
  EXPECT_THROW(psi_map(PsiVariant::H1, PointInOmega::exact(R(1, 3), R(1, 3))), DomainError);
  EXPECT_THROW(psi_map(PsiVariant::H1H2V1, PointInOmega::exact(R(1, 3), R(1, 5))), DomainError);
}

TEST(Psi, TriangleAndStripInequalities) {
  std::mt19937_64 g(5);
  for (int i = 0; i < 3000; ++i) {
    auto r = [&](long lo, long hi) { return R(lo + static_cast<long>(g() % static_cast<unsigned long>(hi - lo)), 10007); };
    // interior of H_1
    auto [a, b] = psi_map(PsiVariant::H1, PointInOmega::exact(r(1, 10006), r(5004, 10006)));
    Rational s = a.lo.reduced() + b.lo.reduced();
    EXPECT_LT(s, Rational(1));
    EXPECT_GT(a.lo.reduced(), Rational(0));
    EXPECT_GT(b.lo.reduced(), Rational(0));
    EXPECT_LT(std::min(a.lo.reduced(), b.lo.reduced()), R(1, 2));
    // interior of V_1: Theta_n at the final mediant, Theta_{n+1} at the next convergent
    auto [c, d] = psi_map(PsiVariant::Omega, PointInOmega::exact(r(5004, 10006), r(1, 10006)));
    Rational t = c.lo.reduced() + Rational(2) * d.lo.reduced();
    EXPECT_GT(t, Rational(1));
    EXPECT_LT(t, Rational(2));
  }
}

TEST(Psi, ConsistentWithThetaInduced) {
  struct V {
    PsiVariant v;
    const char* region;
  };
  for (auto [variant, text] : {V{PsiVariant::H1, "H1"}, V{PsiVariant::Omega, "OMEGA"}, V{PsiVariant::H1H2V1, "H1|H2|V1"}}) {
    Region reg = parse_region(text);
    std::vector<RcfExpansion> xs{rcf_expand(R(1234567, 7654321)), rcf_expand(R(99991, 100003))};
    for (std::uint64_t i = 0; i < 4; ++i) xs.push_back(sample_x(81, i));
    for (const auto& e : xs) {
      InducedWalker iw(e, reg, {kDefaultEnclosureDepth, 5000});
      auto overlap = [](const Enclosure& a, const Enclosure& b) { return !(a.hi < b.lo) && !(b.hi < a.lo); };
      std::optional<std::pair<Enclosure, Enclosure>> prev;
      for (int k = 0; k < 60; ++k) {
        try {
          iw.next();
        } catch (const NonRecurrent&) {
          break;
        }
        Enclosure cur = iw.theta();
        if (prev) {
          EXPECT_TRUE(overlap(prev->second, cur)) << text << " k=" << k;
          if (e.terminated) {
            EXPECT_EQ(prev->second.lo.reduced(), cur.lo.reduced());
          }
        }
        prev.reset();
        auto pnt = iw.point();
        if (pnt.x_exact() && pnt.x_lo.is_zero()) break;
        // a_1 = 1 puts the step after (x,1) on the lower edge y = 1/2 of H1
        if (variant == PsiVariant::H1 && iw.N() == 0 && e.digit(1) == 1) continue;
        try {
          prev = psi_map(variant, pnt);
        } catch (const PrecisionError&) {
          continue;
        }
        EXPECT_TRUE(overlap(prev->first, cur)) << text << " k=" << k;
        if (e.terminated) {
          EXPECT_EQ(prev->first.lo.reduced(), cur.lo.reduced());
        }
      }
    }
  }
}

TEST(BlockExtrema, Examples) {
  auto e4 = prefix({4, 3, 2, 1, 5, 6, 2});
  auto b4 = block_extrema(e4, 0);
  EXPECT_TRUE(b4.applicable);
  EXPECT_EQ(b4.upper_bound, R(3, 2));
  EXPECT_EQ(b4.max_lower_bound, Rational(1));
  EXPECT_TRUE(b4.violations.empty());
  auto b3 = block_extrema(e4, 1);
  EXPECT_EQ(b3.upper_bound, R(6, 5));
  EXPECT_EQ(b3.max_lower_bound, R(2, 3));
  EXPECT_TRUE(b3.violations.empty());
  auto b2 = block_extrema(e4, 2);
  EXPECT_EQ(b2.values.size(), 3u);
  EXPECT_TRUE(b2.violations.empty());
  auto b1 = block_extrema(e4, 3);
  EXPECT_FALSE(b1.applicable);
}

TEST(BlockExtrema, RandomSamples) {
  for (std::uint64_t idx = 0; idx < 10; ++idx) {
    auto e = sample_x(91, idx);
    auto xr = x_range(e);
    for (std::size_t j = 0; j + 3 < e.digits.size() && j < 100; ++j) {
      auto b = block_extrema(e, j, xr);
      EXPECT_TRUE(b.violations.empty()) << idx << " j=" << j;
      EXPECT_EQ(b.undecided, 0u);
    }
  }
}

TEST(Classical, Examples) {
  auto g = classical_inequalities(kGolden, 40);
  EXPECT_EQ(g.total_violations(), 0u);
  EXPECT_EQ(g.undecided, 0u);
  // golden theta_k -> 1/sqrt5 from both sides
  auto xr = x_range(kGolden);
  auto cv = rcf_convergents(kGolden, 30);
  EXPECT_NEAR(theta(xr, cv[31].p, cv[31].q).mid(), 1 / std::sqrt(5.0), 1e-10);

  auto silver = RcfExpansion::periodic(BigInt(0), {}, to_digits({2}));
  auto s = classical_inequalities(silver, 40);
  EXPECT_EQ(s.total_violations(), 0u);
  auto sx = x_range(silver);
  auto scv = rcf_convergents(silver, 30);
  double t1 = theta(sx, scv[30].p, scv[30].q).mid(), t2 = theta(sx, scv[31].p, scv[31].q).mid();
  EXPECT_NEAR(0.5 * (t1 + t2), 1 / (2 * std::sqrt(2.0)), 1e-3);
  EXPECT_LT(std::max(t1, t2), 0.5);
}

TEST(Classical, RandomSamples) {
  for (std::uint64_t idx = 0; idx < 5; ++idx) {
    auto e = sample_x_digits(101, idx, 400);
    auto r = classical_inequalities(e, 300);
    EXPECT_EQ(r.total_violations(), 0u);
    EXPECT_EQ(r.undecided, 0u);
    EXPECT_EQ(r.checked, 4u * 300u);
  }
}

TEST(TheoremSuite, SmallSweepHasNoViolations) {
  std::vector<NamedX> corpus;
  for (std::uint64_t i = 0; i < 5; ++i) corpus.push_back({"sample " + std::to_string(i), sample_x(111, i)});
  corpus.push_back({"golden", kGolden});
  auto rep = theorem_suite(corpus, 60, {}, false);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_EQ(rep.undecided, 0u);
  EXPECT_GT(rep.checks["legendre"], 0u);
  EXPECT_GT(rep.checks["fixed-k"], 0u);
  EXPECT_GT(rep.checks["kuipers-meulenbeld"], 0u);
  for (const auto& v : rep.violations) ADD_FAILURE() << v.theorem << " " << v.input;
}

TEST(TheoremSuite, FixedKBandOneReducesToKoksmaPicture) {
  // k = 1: 1/2 <= Theta < 2/3 forces a convergent after a_{j}=1 or a nearest mediant with a_{j+1} <= 2
  auto e = prefix({2, 1, 1, 3, 2, 1, 4, 1, 1, 2, 5, 3});
  std::vector<NamedX> corpus{{"x", e}};
  SuiteOptions o;
  o.fixed_k_max = 1;
  auto rep = theorem_suite(corpus, 200, o, false);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(TheoremSuite, DetectsPlantedViolation) {
  // a fake classification table must trip Legendre: check_pair on a convergent labelled as nothing
  SuiteReport rep;
  auto e = sample_x(5, 5);
  auto xr = x_range(e);
  auto cv = rcf_convergents(e, 4);
  Enclosure th = theta(xr, cv[4].p, cv[4].q);
  ApproxClass none;
  std::string name = "planted";
  ASSERT_TRUE(th.hi < Ratio(BigInt(1), BigInt(2)));
  check_pair({e, name, cv[4].p, cv[4].q, th, none, std::nullopt}, SuiteOptions{}, {}, rep);
  EXPECT_FALSE(rep.violations.empty());
}
