// Walk the Farey orbit of a random x, look at its returns to H1 and V2&H2,
// and compare the pooled Theta values with the limiting distribution.
#include <cstdio>

#include "farey/farey.hpp"

using namespace farey;

int main() {
  auto x = rcf_expand(Rational::parse("355/1130"));
  std::printf("355/1130 = %s\n", x.to_string().c_str());

  OrbitWalker w(x);
  for (int n = 0; n < 6; ++n) {
    auto st = w.state();
    std::printf("n=%d  u/s=%s/%s  Theta=%s\n", n, st.u.get_str().c_str(), st.s.get_str().c_str(),
                h_value(w.point()).lo.reduced().to_string().c_str());
    w.step();
  }

  Region R = parse_region("V2&H2");
  std::printf("measure(%s) = %.12f\n", R.to_string().c_str(), R.measure());

  auto e = sample_x_digits(7, 0, 2000);
  InducedWalker iw(e, R);
  for (int k = 0; k < 5; ++k) {
    iw.next();
    std::printf("visit %d at N=%llu  Theta in [%.9f, %.9f]\n", k, static_cast<unsigned long long>(iw.N()),
                iw.theta().lo.to_double(), iw.theta().hi.to_double());
  }

  FamilyParams p;
  p.a = 3;
  p.lambda = 1;
  auto th = pooled_thetas(7, 20, 256, R, 500, 1);
  std::printf("KS against the model over %zu values: %.4f\n", th.size(),
              ks_distance(th, cdf_closed_form(Family::CorVI, p)));
}
