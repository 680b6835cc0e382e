#pragma once

#include <cstdint>
#include <vector>

#include "cf_core.hpp"

namespace farey {

// Counter-based generator: word k of stream (seed, index) is the SplitMix64
// finalizer applied to a key derived from (seed, index) plus k times the
// SplitMix64 increment. Every word is computable independently, so streams
// split across workers without coordination.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  CounterRng(std::uint64_t seed, std::uint64_t index)
      : key_(mix(mix(seed) ^ (index * 0xD1B54A32D192ED03ULL + kGamma))) {}

  std::uint64_t word(std::uint64_t k) const { return mix(key_ + (k + 1) * kGamma); }

  // uniform in [0, 1) with 53 bits
  double uniform(std::uint64_t k) const { return static_cast<double>(word(k) >> 11) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

// m / 2^bits with m built from the leading `bits` bits of the stream; m >= 1.
inline Rational sample_dyadic(std::uint64_t seed, std::uint64_t index, unsigned bits) {
  if (bits < 64) throw DomainError("sample bit depth must be >= 64");
  CounterRng rng(seed, index);
  unsigned words = (bits + 63) / 64;
  std::vector<std::uint64_t> ws(words);
  for (unsigned k = 0; k < words; ++k) ws[k] = rng.word(k);
  BigInt m;
  mpz_import(m.get_mpz_t(), words, 1, sizeof(std::uint64_t), 0, 0, ws.data());
  unsigned extra = words * 64 - bits;
  if (extra) m >>= extra;
  if (sgn(m) == 0) m = 1;
  BigInt den = 1;
  den <<= bits;
  return Rational(m, den);
}

// Exact expansion of the dyadic sample, exposed as a digit prefix of a typical real.
inline RcfExpansion sample_x(std::uint64_t seed, std::uint64_t index, unsigned bits = 256) {
  RcfExpansion e = rcf_expand(sample_dyadic(seed, index, bits));
  e.terminated = false;
  return e;
}

// Same stream, bit depth raised until at least `min_digits` partial quotients exist.
// Longer samples share their leading bits with the shorter ones.
inline RcfExpansion sample_x_digits(std::uint64_t seed, std::uint64_t index, std::size_t min_digits,
                                    unsigned base_bits = 256) {
  // roughly 0.584 digits per bit
  unsigned bits = base_bits;
  auto want = static_cast<unsigned>(static_cast<double>(min_digits) / 0.55) + 64;
  if (want > bits) bits = (want + 63) / 64 * 64;
  for (;;) {
    RcfExpansion e = sample_x(seed, index, bits);
    if (e.digits.size() >= min_digits) return e;
    bits += bits / 4 + 64;
  }
}

}  // namespace farey
