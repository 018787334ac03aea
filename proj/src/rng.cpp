#include "pgate/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace pgate {

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(idx);
  return idx;
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix init_weights(std::size_t rows, std::size_t cols, Rng& rng, InitScheme scheme,
                    double constant) {
  if (rows == 0 || cols == 0) throw DimensionError("init_weights: dimensions must be positive");
  switch (scheme) {
    case InitScheme::Zeros:
      return Matrix(rows, cols, 0.0);
    case InitScheme::Constant:
      return Matrix(rows, cols, constant);
    case InitScheme::UniformScaled:
      break;
  }
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) {
    // uniform01 can return exactly 0; redraw so the open interval holds.
    double u = rng.uniform01();
    while (u == 0.0) u = rng.uniform01();
    v = s * (2.0 * u - 1.0);
  }
  return m;
}

}  // namespace pgate
