#include "drcate/rng.hpp"

#include <cmath>

namespace drcate {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (auto p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

// Robert (1995): exponential proposal for the far tail, plain rejection near
// the mode.
double Rng::standard_normal_tail(double lower) {
  if (lower < 0.45) {
    for (;;) {
      const double z = normal();
      if (z >= lower) return z;
    }
  }
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double z = lower - std::log(uniform()) / rate;
    const double accept = std::exp(-0.5 * (z - rate) * (z - rate));
    if (uniform() <= accept) return z;
  }
}

double Rng::truncated_normal_unit(double mean, bool positive) {
  // z = mean + e with z > 0  <=>  e > -mean
  if (positive) return mean + standard_normal_tail(-mean);
  // z < 0  <=>  -e > mean
  return mean - standard_normal_tail(mean);
}

}  // namespace drcate
