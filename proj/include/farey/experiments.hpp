#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "induced.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "sampling.hpp"

namespace farey {

// Runs fn on sample (seed, index) with at least min_digits partial quotients,
// doubling the digit budget whenever fn runs off the end of the expansion.
template <class Fn>
auto with_sample(std::uint64_t seed, std::uint64_t index, unsigned bits, std::size_t min_digits, Fn fn)
    -> decltype(fn(std::declval<const RcfExpansion&>())) {
  std::size_t digits = std::max<std::size_t>(min_digits, 16);
  for (;;) {
    RcfExpansion e = sample_x_digits(seed, index, digits, bits);
    try {
      return fn(e);
    } catch (const BudgetExhausted&) {
      if (digits > (std::size_t{1} << 26)) throw;
      digits *= 2;
    }
  }
}

// first digit budget for count visits to R: visits per digit tend to measure(R) / log 2
inline std::size_t digits_for(double measure, std::size_t count) {
  if (!(measure > 1e-6)) return count + 64;
  double d = static_cast<double>(count) * std::log(2.0) / measure * 1.4 + 200.0;
  return static_cast<std::size_t>(std::min(d, 6.0e7));
}

// Theta_1 .. Theta_count along the visits of sample (seed, index) to R
inline std::vector<double> sample_thetas(std::uint64_t seed, std::uint64_t index, unsigned bits, const Region& R,
                                         std::size_t count, std::size_t digit_hint = 0) {
  return with_sample(seed, index, bits, std::max(digit_hint, count + 64), [&](const RcfExpansion& e) {
    auto th = theta_induced(e, R, count);
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t k = 1; k < th.size(); ++k) out.push_back(th[k].mid());
    return out;
  });
}

// samples 0 .. n-1 pooled in index order
inline std::vector<double> pooled_thetas(std::uint64_t seed, std::size_t samples, unsigned bits, const Region& R,
                                         std::size_t count, unsigned threads) {
  std::size_t hint = digits_for(R.measure(), count);
  auto parts =
      parallel_map(samples, threads, [&](std::size_t i) { return sample_thetas(seed, i, bits, R, count, hint); });
  std::vector<double> all;
  all.reserve(samples * count);
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

inline LevyEstimate sample_levy(std::uint64_t seed, std::uint64_t index, unsigned bits, const Region& R,
                                std::size_t count, std::size_t digit_hint = 0) {
  return with_sample(seed, index, bits, std::max(digit_hint, count + 64),
                     [&](const RcfExpansion& e) { return levy_estimates(e, R, count); });
}

inline std::string sample_name(std::uint64_t seed, std::uint64_t index, unsigned bits) {
  return "sample(seed=" + std::to_string(seed) + ",index=" + std::to_string(index) + ",bits=" + std::to_string(bits) +
         ")";
}

// Accepted forms: "p/q" or a decimal, "[a0; a1, ..., (b1, ...)]", "seed:index".
inline RcfExpansion parse_x(const std::string& text, unsigned bits = 256) {
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string t = trim(text);
  if (t.empty()) throw ParseError("empty x", 0);
  if (t.front() == '[') {
    if (t.back() != ']') throw ParseError("expected ']'", t.size());
    std::string body = t.substr(1, t.size() - 2);
    auto semi = body.find(';');
    std::string a0 = trim(body.substr(0, semi));
    std::vector<BigInt> pre, per;
    bool in_period = false, open = false;
    if (semi != std::string::npos) {
      std::string rest = body.substr(semi + 1);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        auto comma = rest.find(',', pos);
        std::string tok = trim(rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        pos = comma == std::string::npos ? rest.size() + 1 : comma + 1;
        if (!tok.empty() && tok.front() == '(') {
          in_period = open = true;
          tok = trim(tok.substr(1));
        }
        bool close = !tok.empty() && tok.back() == ')';
        if (close) tok = trim(tok.substr(0, tok.size() - 1));
        if (tok == "...") {
          open = true;
          continue;
        }
        if (tok.empty()) throw ParseError("empty partial quotient", semi + 2 + pos);
        BigInt d;
        if (d.set_str(tok, 10) != 0) throw ParseError("bad partial quotient '" + tok + "'", semi + 2 + pos);
        (in_period ? per : pre).push_back(d);
        if (close) in_period = false;
      }
    }
    BigInt i0;
    if (i0.set_str(a0.empty() ? "0" : a0, 10) != 0) throw ParseError("bad integer part", 1);
    if (!per.empty()) return RcfExpansion::periodic(i0, pre, per);
    if (open) return RcfExpansion::prefix(i0, pre);
    return RcfExpansion::finite(i0, pre);
  }
  auto colon = t.find(':');
  if (colon != std::string::npos) {
    std::uint64_t seed = std::stoull(t.substr(0, colon)), index = std::stoull(t.substr(colon + 1));
    return sample_x(seed, index, bits);
  }
  return rcf_expand(Rational::parse(t));
}

}  // namespace farey
