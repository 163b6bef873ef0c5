#include "hsdn/rng.hpp"

namespace hsdn {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::mix(std::uint64_t seed, std::string_view label) {
  std::uint64_t x = seed ^ fnv1a(label);
  // A couple of warm-up rounds decorrelate nearby seeds.
  splitmix64(x);
  splitmix64(x);
  return x;
}

std::uint64_t RngStream::derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
  splitmix64(x);
  return splitmix64(x);
}

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : state_(mix(seed, label)) {}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform() {
  // 53 mantissa bits -> [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

bool RngStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double RngStream::lognormal(double mu, double sigma) {
  return std::exp(mu + sigma * normal());
}

}  // namespace hsdn
