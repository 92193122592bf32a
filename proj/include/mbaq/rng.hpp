#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mbaq {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Integer uniform on [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

// Box-Muller; consumes two draws per call.
inline double gaussian(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace mbaq
