#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "pgate/matrix.hpp"

namespace pgate {

/// Seeded 64-bit Mersenne Twister. The engine output sequence is fixed by the
/// C++ standard; the derived draws below avoid <random> distributions, whose
/// algorithms are implementation-defined, so streams are reproducible on any
/// conforming toolchain.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::string_view algorithm() const noexcept { return kAlgorithm; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n), rejection-sampled so it is unbiased.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

enum class InitScheme { UniformScaled, Zeros, Constant };

/// UniformScaled draws from U(-s, s) with s = sqrt(6 / (rows + cols)).
Matrix init_weights(std::size_t rows, std::size_t cols, Rng& rng,
                    InitScheme scheme, double constant = 0.0);

}  // namespace pgate
