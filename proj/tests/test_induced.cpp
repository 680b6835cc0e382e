#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "farey/induced.hpp"
#include "farey/sampling.hpp"

using namespace farey;

namespace {

Rational R(long p, long q) { return Rational(BigInt(p), BigInt(q)); }

RcfExpansion prefix(std::initializer_list<unsigned long> ds) {
  return RcfExpansion::prefix(BigInt(0), to_digits(ds));
}

const RcfExpansion kGolden = RcfExpansion::periodic(BigInt(0), {}, to_digits({1}));

std::vector<Region> family() {
  return {parse_region("H1"), parse_region("H2"), parse_region("V1"), parse_region("V2&H2"),
          parse_region("H1|H2|V1")};
}

}  // namespace

TEST(HittingTime, Examples) {
  auto e = prefix({3, 2, 4, 1, 5, 2, 2});
  EXPECT_EQ(hitting_time(e, Region::h_strip(1), 0), 3u);
  EXPECT_EQ(hitting_time(e, Region::h_strip(1), 3), 2u);
  for (std::uint64_t from : {0u, 1u, 7u, 12u}) EXPECT_EQ(hitting_time(e, Region::omega(), from), 1u);
  InducedOptions opt;
  opt.step_cap = 5000;
  try {
    hitting_time(kGolden, Region::v_strip(2), 0, opt);
    FAIL();
  } catch (const NonRecurrent& nr) {
    EXPECT_EQ(nr.from_step, 0u);
  }
}

TEST(HittingTime, MatchesPlainStepping) {
  for (std::uint64_t idx = 0; idx < 5; ++idx) {
    auto e = sample_x(8, idx);
    for (const auto& r : family()) {
      for (std::uint64_t from : {0u, 5u, 40u}) {
        OrbitWalker w(e);
        while (w.n() < from) w.step();
        std::uint64_t t = 0;
        do {
          w.step();
          ++t;
        } while (r.contains(w.point()) != Membership::In);
        EXPECT_EQ(hitting_time(e, r, from), t) << r.to_string() << " from " << from;
      }
    }
  }
}

TEST(InducedOrbit, Examples) {
  auto e = prefix({3, 2, 4, 1, 5, 2, 2, 3});
  auto h1 = induced_orbit(e, Region::h_strip(1), 3);
  std::vector<std::uint64_t> N;
  std::vector<std::string> cv;
  for (const auto& en : h1.entries) {
    N.push_back(en.N);
    cv.push_back(farey_convergent(en.state).to_string());
  }
  EXPECT_EQ(N, (std::vector<std::uint64_t>{0, 3, 5, 9}));
  EXPECT_EQ(cv[0], "1/0");
  EXPECT_EQ(cv[1], "0/1");
  EXPECT_EQ(cv[2], "1/3");
  EXPECT_EQ(h1.return_times(), (std::vector<std::uint64_t>{3, 2, 4}));

  auto h2 = induced_orbit(e, Region::h_strip(2), 0);
  EXPECT_EQ(h2.entries[0].N, 1u);
  EXPECT_EQ(farey_convergent(h2.entries[0].state).to_string(), "1/1");

  auto v1 = induced_orbit(e, Region::v_strip(1), 1);
  EXPECT_EQ(v1.entries[0].N, 2u);
  EXPECT_EQ(farey_convergent(v1.entries[0].state).to_string(), "1/2");
  EXPECT_EQ(v1.entries[1].N, 4u);
  EXPECT_EQ(farey_convergent(v1.entries[1].state).to_string(), "1/4");
}

TEST(InducedOrbit, CompositionMatchesRawOrbit) {
  for (std::uint64_t idx = 0; idx < 4; ++idx) {
    auto e = sample_x(17, idx);
    auto raw = orbit(e, 400);
    for (const auto& r : family()) {
      InducedWalker iw(e, r);
      std::vector<std::uint64_t> Ns;
      for (;;) {
        iw.next();
        if (iw.N() > 400) break;
        if (!Ns.empty()) {
          EXPECT_GT(iw.N(), Ns.back());
        }
        Ns.push_back(iw.N());
        EXPECT_EQ(iw.state(), raw[iw.N()].state);
        EXPECT_EQ(r.contains(iw.point()), Membership::In);
      }
      // every raw step between visits is outside
      std::size_t k = 0;
      for (std::uint64_t n = 0; n <= 400; ++n) {
        if (k < Ns.size() && Ns[k] == n) {
          ++k;
          continue;
        }
        EXPECT_NE(r.contains(raw[n].point), Membership::In) << r.to_string() << " n=" << n;
      }
    }
  }
}

// visit times of R among raw steps 0 .. n_max, by exhaustive stepping
std::vector<std::uint64_t> raw_visits(const RcfExpansion& e, const Region& r, std::uint64_t n_max) {
  std::vector<std::uint64_t> out;
  OrbitWalker w(e);
  for (;;) {
    if (r.contains(w.point(40)) == Membership::In) out.push_back(w.n());
    if (w.n() == n_max) break;
    w.step();
  }
  return out;
}

TEST(InducedOrbit, PrunedBlocksMatchExhaustiveStepping) {
  std::vector<Region> regions = family();
  for (const char* s : {"V1\\H1", "V3|H4", "RECT(1/3,1/2,1/4,1/2)", "RECT(2/7,3/5,1/5,1/3)&V2", "H2\\V1",
                        "(H1|V1)&SUB(0.3)"}) {
    regions.push_back(parse_region(s));
  }
  std::vector<RcfExpansion> xs;
  for (std::uint64_t idx = 0; idx < 3; ++idx) {
    auto e = sample_x_digits(29, idx, 1500);
    xs.push_back(RcfExpansion::prefix(e.integer_part, e.digits));
  }
  for (long q = 2; q <= 40; q += 3) {
    for (long p = 1; p < q; p += 2) xs.push_back(rcf_expand(Rational(BigInt(p), BigInt(q))));
  }
  xs.push_back(RcfExpansion::periodic(BigInt(0), to_digits({1, 1, 1, 2}), to_digits({1, 3})));
  for (const auto& e : xs) {
    std::uint64_t n_max = e.terminated ? 120 : 2500;
    for (const auto& r : regions) {
      auto want = raw_visits(e, r, n_max);
      std::vector<std::uint64_t> got;
      InducedWalker iw(e, r, {kDefaultEnclosureDepth, 10 * n_max});
      try {
        for (;;) {
          iw.next();
          if (iw.N() > n_max) break;
          got.push_back(iw.N());
        }
      } catch (const NonRecurrent&) {
      }
      EXPECT_EQ(got, want) << r.to_string() << " x=" << e.to_string();
    }
  }
}

TEST(ThetaInduced, Examples) {
  auto e = prefix({3, 2, 4, 1, 5, 2, 2, 3});
  auto th = theta_induced(e, Region::h_strip(1), 2);
  EXPECT_TRUE(th[0].exact());
  EXPECT_EQ(th[0].lo, Ratio(BigInt(0), BigInt(1)));

  auto g = theta_induced(kGolden, Region::h_strip(1), 40);
  const double target = 1.0 / std::sqrt(5.0);
  EXPECT_NEAR(g.back().mid(), target, 1e-15);
  // consecutive coefficients fall on opposite sides of the limit
  for (std::size_t k = 3; k + 1 < 30; ++k) {
    int a = compare(g[k].lo, target), b = compare(g[k + 1].lo, target);
    EXPECT_EQ(a, compare(g[k].hi, target)) << k;
    EXPECT_EQ(a * b, -1) << k;
  }

  auto r = theta_induced(rcf_expand(R(2, 7)), Region::h_strip(1), 2);
  // entries: 1/0, 0/1, 1/3
  EXPECT_EQ(r[2].lo.reduced(), R(3, 7));
  EXPECT_TRUE(r[2].exact());
}

TEST(ThetaInduced, EqualsQuadraticFormForRationals) {
  std::mt19937_64 g(31);
  for (int t = 0; t < 40; ++t) {
    long q = static_cast<long>(g() % 1000000) + 2;
    long p = static_cast<long>(g() % static_cast<unsigned long>(q - 1)) + 1;
    Rational x = R(p, q);
    auto e = rcf_expand(x);
    for (const auto& r : family()) {
      InducedWalker iw(e, r, {kDefaultEnclosureDepth, 5000});
      for (int k = 0; k < 30; ++k) {
        try {
          iw.next();
        } catch (const NonRecurrent&) {
          break;
        }
        auto st = iw.state();
        if (sgn(st.s) == 0) continue;
        Rational lhs = Rational(st.s * st.s, BigInt(1)) * abs(x - Rational(st.u, st.s));
        auto th = iw.theta();
        ASSERT_TRUE(th.exact());
        EXPECT_EQ(th.lo.reduced(), lhs);
        if (iw.point().x_lo.is_zero()) break;
      }
    }
  }
}

TEST(VisitRatio, SameRegionAndNoVisits) {
  auto e = sample_x(3, 1);
  EXPECT_DOUBLE_EQ(visit_ratio(e, 300, Region::h_strip(1), Region::h_strip(1)), 1.0);
  // golden x_n stays at (sqrt5 - 1)/2, inside V_1
  EXPECT_THROW(visit_ratio(kGolden, 100, Region::h_strip(1), Region::v_strip(2)), DomainError);
}

TEST(VisitRatio, CountsMatchPlainStepping) {
  for (std::uint64_t idx = 0; idx < 4; ++idx) {
    auto e = sample_x(4, idx);
    Region S = parse_region("V2&H2"), Rr = parse_region("H1|H2|V1");
    std::uint64_t cs = 0, cr = 0;
    OrbitWalker w(e);
    for (int n = 0; n < 300; ++n) {
      auto p = w.point();
      if (S.contains(p) == Membership::In) ++cs;
      if (Rr.contains(p) == Membership::In) ++cr;
      w.step();
    }
    auto [a, b] = detail::count_visits(e, 300, S, Rr, kDefaultEnclosureDepth);
    EXPECT_EQ(a, cs);
    EXPECT_EQ(b, cr);
  }
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(Region::h_strip(1)), std::numbers::pi * std::numbers::pi / (6 * std::log(2.0)), 1e-12);
  EXPECT_NEAR(entropy(parse_region("H1|H2|V1")), 1.18657, 1e-5);
  EXPECT_THROW(entropy(Region::omega()), DomainError);
}

TEST(Levy, GoldenMeanIsExactRate) {
  // s_n = F_{n+1}; log s_n / n -> log phi
  auto est = levy_estimates(kGolden, Region::h_strip(1), 400);
  double phi = (1 + std::sqrt(5.0)) / 2;
  EXPECT_NEAR(est.log_denominator, std::log(phi), 5e-3);
  EXPECT_NEAR(est.log_error, -2 * std::log(phi), 1e-2);
}

TEST(GaussConjugacy, Examples) {
  auto g = gauss_conjugacy_residual(kGolden, 20);
  EXPECT_EQ(g.residuals.size(), 21u);
  EXPECT_LT(g.last, 1.5e-8);

  auto z = gauss_conjugacy_residual(sample_x(1, 1), 0);
  EXPECT_EQ(z.residuals.size(), 1u);

  // rational x: initial gap |1/y0 - 1 - 0| at (x, 1) is 0, and both sides stay exact
  auto r = gauss_conjugacy_residual(rcf_expand(R(1234567, 7654321)), 5);
  for (double v : r.residuals) EXPECT_LT(v, 1e-2);
}

TEST(GaussConjugacy, ShrinksOnSamples) {
  for (std::uint64_t idx = 0; idx < 10; ++idx) {
    auto g = gauss_conjugacy_residual(sample_x(6, idx), 20);
    EXPECT_LT(g.last, 1e-7) << idx;
  }
}

TEST(Rho, Examples) {
  auto e = prefix({3, 2, 4, 1, 5});
  EXPECT_EQ(rho_map(e, 0), 0u);
  std::vector<std::uint64_t> got;
  for (std::uint64_t n = 1; n <= 5; ++n) got.push_back(rho_map(e, n));
  EXPECT_EQ(got, (std::vector<std::uint64_t>{3, 1, 2, 5, 4}));
  for (std::uint64_t n = 0; n <= 14; ++n) EXPECT_EQ(rho_inverse(e, rho_map(e, n)), n);
}

TEST(Rho, DenominatorsNondecreasing) {
  for (std::uint64_t idx = 0; idx < 10; ++idx) {
    auto e = sample_x_digits(41, idx, 2500);
    auto s = rho_denominators(e, 2000);
    for (std::size_t k = 1; k < s.size(); ++k) EXPECT_LE(s[k - 1], s[k]) << k;
  }
}

TEST(Rearrangement, LemmaBoundsAndEcdfGap) {
  for (std::uint64_t idx = 0; idx < 3; ++idx) {
    auto e = sample_x_digits(43, idx, 8000);
    for (const auto& r : family()) {
      auto prof = rearrangement_profile(e, r, 300);
      for (std::size_t m = 0; m < prof.size(); ++m) {
        EXPECT_LE(prof[m].sym_diff, 2u) << r.to_string() << " m=" << m;
        EXPECT_LE(prof[m].j_gap, 1u) << r.to_string() << " m=" << m;
      }
      // ECDFs of Theta under both orders differ by at most sym_diff / (n+1)
      auto rr = rearrangement(e, r, 300);
      auto th = theta_induced(e, r, rr.N.size() - 1);
      for (std::size_t m : {10u, 100u, 300u}) {
        for (double z : {0.3, 0.5, 0.8, 1.2}) {
          int a = 0, b = 0;
          for (std::size_t k = 0; k <= m; ++k) {
            if (th[k].mid() <= z) ++a;
            if (th[rr.order[k]].mid() <= z) ++b;
          }
          EXPECT_LE(std::abs(a - b), static_cast<int>(prof[m].sym_diff));
        }
      }
    }
  }
}

TEST(OrbitStats, MergeEqualsConcatenation) {
  OrbitStats a, b, all;
  for (auto* s : {&a, &b, &all}) s->bin_edges = {0.25, 0.5, 0.75};
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 1000; ++i) {
    double v = U(g);
    (i % 3 ? a : b).add_theta(v);
    all.add_theta(v);
  }
  a.merge(b);
  EXPECT_EQ(a.bin_counts, all.bin_counts);
  EXPECT_EQ(a.samples.size(), all.samples.size());
}
