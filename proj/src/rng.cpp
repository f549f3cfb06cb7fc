#include "batchlr/rng.hpp"

#include <cmath>

namespace batchlr {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

uint64_t mix64(uint64_t x) {
  // splitmix64 finalizer
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

Rng Rng::derive(std::string_view label, uint64_t i, uint64_t j,
                uint64_t l) const {
  uint64_t x = seed_;
  x = mix64(x ^ fnv1a(label));
  x = mix64(x + kGolden * (i + 1));
  x = mix64(x + kGolden * (j + 1));
  x = mix64(x + kGolden * (l + 1));
  return Rng(x);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // u1 in (0, 1] so the log is finite
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

uint64_t Rng::below(uint64_t n) {
  require_arg(n > 0, "Rng::below: n must be positive");
  uint64_t bound = UINT64_MAX - UINT64_MAX % n;
  uint64_t r;
  do {
    r = engine_();
  } while (r >= bound);
  return r % n;
}

Vec Rng::gaussian_vec(int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = normal();
  return v;
}

Vec Rng::unit_vector(int d) {
  Vec v = gaussian_vec(d);
  double nrm = v.norm();
  while (nrm < 1e-12) {
    v = gaussian_vec(d);
    nrm = v.norm();
  }
  return v / nrm;
}

}  // namespace batchlr
