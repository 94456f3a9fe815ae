// SPDX-License-Identifier: Apache-2.0
#ifndef WLANSDN_RNG_HPP
#define WLANSDN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace wlansdn {

/// Deterministic 64-bit generator (splitmix64, Steele et al.).
///
/// Every stochastic component of a run owns its own stream, forked from the
/// scenario seed by label, so adding a component never perturbs the draws
/// seen by the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Independent child stream; label keeps sibling streams decorrelated.
  Rng fork(std::string_view label) const {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a over the label
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    Rng child(state_ ^ h);
    child.next();  // decouple from the parent's current output
    return child;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) { return n ? next() % n : 0; }

  /// Exponential with the given mean.
  double exponential(double mean) {
    double u = uniform();
    return -mean * std::log1p(-u);
  }

  void fill(std::uint8_t* out, std::size_t n) {
    std::size_t i = 0;
    while (i < n) {
      std::uint64_t v = next();
      for (int b = 0; b < 8 && i < n; ++b, ++i) {
        out[i] = static_cast<std::uint8_t>(v >> (8 * b));
      }
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace wlansdn

#endif  // WLANSDN_RNG_HPP
