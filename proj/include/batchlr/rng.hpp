#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "batchlr/common.hpp"

namespace batchlr {

uint64_t mix64(uint64_t x);

/// Deterministic random stream. All randomness in the library flows from one
/// root seed through labeled derivation, so adding consumers (more trials,
/// more repeats) never perturbs existing streams.
///
/// Normal variates use Box-Muller on top of std::mt19937_64 rather than
/// std::normal_distribution, whose algorithm is implementation defined.
/// Identical seeds therefore give bit-identical streams on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  /// Child stream addressed by a label and up to three indices. Does not
  /// consume state from this stream.
  Rng derive(std::string_view label, uint64_t i = 0, uint64_t j = 0,
             uint64_t l = 0) const;

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal. Consumes exactly two engine draws.
  double normal();

  /// Unbiased uniform integer in [0, n).
  uint64_t below(uint64_t n);

  Vec gaussian_vec(int d);

  /// Uniform direction on the unit sphere.
  Vec unit_vector(int d);

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace batchlr
