#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace hsdn {

// Deterministic pseudo-random stream derived from (global seed, label).
// Streams with different labels are statistically independent; the same
// (seed, label) pair always reproduces the same sequence. Sampling is
// implemented by hand (no std::*_distribution) so that sequences are
// identical across standard library implementations.
class RngStream {
 public:
  RngStream() : RngStream(0, "") {}
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p);

  // Standard normal via Box-Muller; the spare value is cached per stream.
  double normal();

  double lognormal(double mu, double sigma);

  static std::uint64_t mix(std::uint64_t seed, std::string_view label);
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hsdn
