// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Seedable random helpers built on std::mt19937_64. The standard
// distributions are not bit-portable across library implementations, so the
// few draws we need are spelled out here; every stochastic component of the
// library goes through this header and is therefore reproducible from a seed
// on any platform.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace docmt {

using Rng = std::mt19937_64;

// splitmix64; used to derive independent substreams from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t tag = 0) {
  return Rng(mix_seed(seed, tag));
}

// Uniform in [0,1) with 53 random bits.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), n >= 1. Rejection sampling keeps it unbiased.
inline std::uint64_t uniform_int(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Standard normal via Box-Muller (no cached spare; one value per call keeps
// the stream position independent of call history).
inline double normal(Rng& rng) {
  const double u = 1.0 - uniform_real(rng);
  const double v = uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

}  // namespace docmt
