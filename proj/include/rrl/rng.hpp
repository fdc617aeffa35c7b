#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rrl {

// Deterministic random source. All transforms are implemented on top of the
// raw mt19937_64 stream so that a given seed produces the same draw sequence
// on every platform; the std::* distributions make no such guarantee.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double gaussian();

  // Gamma(shape, 1) via Marsaglia-Tsang, with the boost trick for shape < 1.
  double gamma(double shape);

  // Beta(a, b) as g_a / (g_a + g_b) from two gamma draws.
  double beta(double a, double b);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Stable seed-splitting rule: fold each index into the master seed through
// splitmix64. Used by the harness so parallel and serial execution see the
// same per-episode streams.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);

}  // namespace rrl
