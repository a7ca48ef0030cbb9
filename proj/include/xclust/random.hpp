#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace xclust {

using Engine = std::mt19937_64;

/// Per-replication seed: the base seed xor'ed with the replication index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return seed ^ index;
}

/// Engines are always built through seed_seq so that neighbouring seeds
/// (as produced by derive_seed) give unrelated streams.
inline Engine make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), 0x9e3779b9u};
  return Engine(seq);
}

// Draws below are written out rather than taken from <random> distributions so
// that streams are identical across standard library implementations.

/// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1].
inline double uniform_open0(Engine& eng) { return 1.0 - uniform01(eng); }

/// Unit Pareto(alpha): P(Z > z) = z^{-alpha}, z >= 1.
inline double pareto(Engine& eng, double alpha) {
  const double u = uniform_open0(eng);
  if (alpha == 1.0) return 1.0 / u;
  if (alpha == 2.0) return 1.0 / std::sqrt(u);
  if (alpha == 0.5) return 1.0 / (u * u);
  return std::pow(u, -1.0 / alpha);
}

/// Unit Pareto magnitude with a positive sign with probability p.
inline double signed_pareto(Engine& eng, double alpha, double p) {
  const double z = pareto(eng, alpha);
  if (p >= 1.0) return z;
  return uniform01(eng) < p ? z : -z;
}

/// Poisson(mean) by inversion for small means, falling back to <random>.
inline std::uint64_t poisson(Engine& eng, double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    const double u = uniform01(eng);
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u >= cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(eng);
}

}  // namespace xclust
