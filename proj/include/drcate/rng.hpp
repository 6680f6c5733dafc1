#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace drcate {

// Mixes a master seed with a path of stream labels into an independent
// 64-bit seed (SplitMix64 finaliser). Used for every substream so results do
// not depend on which worker ran which unit of work.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Stream labels for derive_seed.
enum class Stream : std::uint64_t {
  data = 1,
  query = 2,
  propensity = 3,
  outcome = 4,
  bootstrap = 5,
  split = 6,
  replicate = 7,
};

constexpr std::uint64_t label(Stream s) noexcept { return static_cast<std::uint64_t>(s); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Uniform integer in [0, upper).
  std::uint64_t below(std::uint64_t upper) {
    return std::uniform_int_distribution<std::uint64_t>(0, upper - 1)(engine_);
  }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }
  // X ~ InvGamma(shape, scale): 1 / Gamma(shape, 1/scale).
  double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }

  // Draw from N(mean, 1) restricted to (0, inf) when `positive`, else (-inf, 0).
  double truncated_normal_unit(double mean, bool positive);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  // Standard normal restricted to [lower, inf).
  double standard_normal_tail(double lower);

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace drcate
