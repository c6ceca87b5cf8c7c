#pragma once

#include <cstdint>

#include "chyvae/errors.hpp"

namespace chyvae {

// Counter-based pseudorandom stream. Each draw hashes (seed, counter) with a
// 64-bit finalizer, so the sequence is a pure function of the seed and the
// number of draws taken: identical seeds give identical sequences on every
// platform, and a stream can be checkpointed as two integers.
//
// A stream is single-owner. Concurrent samplers fork independent children
// with derive() instead of sharing one stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), counter_(0) {}

  static RngStream restore(std::uint64_t seed, std::uint64_t counter) {
    RngStream s(seed);
    s.counter_ = counter;
    return s;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1); safe to feed into log().
  double next_double();

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller. Consumes exactly two draws and keeps no
  // cached spare, so the stream state stays (seed, counter).
  double next_gaussian();

  // Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 boosted through the
  // Gamma(shape+1) * U^{1/shape} identity.
  double next_gamma(double shape, double scale);

  // Independent child stream keyed by index. Children of distinct indices,
  // and children vs. the parent, produce unrelated sequences.
  RngStream derive(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace chyvae
