#include "chyvae/rng.hpp"

#include <cmath>

namespace chyvae {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Stafford variant 13 of the splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(seed_ + kGolden * counter_);
}

double RngStream::next_double() {
  // 53 mantissa bits, offset by half an ulp to stay inside (0, 1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) throw DomainError("next_below: n must be > 0");
  // Rejection to remove modulo bias.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::next_gaussian() {
  double u1 = next_double();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double RngStream::next_gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0) throw DomainError("next_gamma: shape and scale must be > 0");
  if (shape < 1.0) {
    double g = next_gamma(shape + 1.0, 1.0);
    double u = next_double();
    return scale * g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = next_double();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

RngStream RngStream::derive(std::uint64_t index) const {
  return RngStream(mix64(seed_ ^ mix64(index + kGolden)));
}

}  // namespace chyvae
