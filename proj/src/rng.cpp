#include "rrl/rng.hpp"

#include <cmath>
#include <numbers>

#include "rrl/errors.hpp"

namespace rrl {

double RngHandle::uniform01() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RngHandle::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

int RngHandle::uniform_int(int n) {
  if (n <= 0) throw ContractError("uniform_int: n must be positive");
  int v = static_cast<int>(uniform01() * n);
  return v < n ? v : n - 1;
}

double RngHandle::gaussian() {
  // Box-Muller. u1 is kept away from 0 so the log stays finite.
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngHandle::gamma(double shape) {
  if (!(shape > 0.0)) throw ContractError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^(1/a)
    const double g = gamma(shape + 1.0);
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngHandle::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ContractError("beta: shape parameters must be positive");
  const double ga = gamma(a);
  const double gb = gamma(b);
  const double s = ga + gb;
  if (s <= 0.0) return 0.5;
  return ga / s;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

}  // namespace rrl
