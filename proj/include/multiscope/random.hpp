#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace multiscope {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream seed from a base seed and a tuple of indices, so that
/// results do not depend on evaluation order or worker count.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Stream tags used with derive_seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kCpfTool = 2,
  kCpfProbe = 3,
  kResample = 4,
  kNoiseModel = 5,
  kObservation = 6,
  kPad = 7,
  kAction = 8,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

/// Low-variance (systematic) resampling of normalized weights: one uniform
/// offset, n evenly spaced pointers. Each index i receives floor or ceil of
/// n * w_i descendants.
inline std::vector<int> systematic_resample(std::span<const double> weights, int n, std::mt19937_64& rng) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  if (weights.empty() || n <= 0) return out;
  const double step = 1.0 / n;
  double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = weights[0];
  std::size_t i = 0;
  for (int k = 0; k < n; ++k) {
    while (u > cumulative && i + 1 < weights.size()) cumulative += weights[++i];
    out.push_back(static_cast<int>(i));
    u += step;
  }
  return out;
}

}  // namespace multiscope
