#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace roep {

/// Derives a child seed from a root seed, a stream name and an index.
/// Every random quantity in a run flows from one root seed through named
/// streams ("scenegen", "policy", "init", ...), so one component can be
/// perturbed without shifting the others.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

/// Seeded 64-bit stream. The sampling helpers below are written out instead of
/// using the <random> distributions so that sequences are identical across
/// standard library implementations.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t root, std::string_view name, std::uint64_t index = 0) {
    return Rng(derive_seed(root, name, index));
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }

private:
  std::mt19937_64 engine_;
};

}  // namespace roep
