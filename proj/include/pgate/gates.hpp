#pragma once

#include <cmath>
#include <stdexcept>

#include "pgate/matrix.hpp"

namespace pgate {

/// The p-norm coupling between the nonlinearity gate a1 and the linearity
/// gate a2:  (a1^p + a2^p)^(1/p) = 1, i.e. a2 = (1 - a1^p)^(1/p).
///
/// p = 1 is the convex combination of standard highway/GRU cells. Larger p
/// opens both gates further; p -> inf keeps a2 -> 1 for any a1 < 1. Both
/// gate values are kept inside [epsilon, 1 - epsilon] so the backward factor
/// -(a1/a2)^(p-1) stays finite under sigmoid saturation.
class PNorm {
 public:
  static constexpr double kDefaultEpsilon = 1e-12;

  explicit PNorm(double p, double epsilon = kDefaultEpsilon);

  double p() const noexcept { return p_; }
  double epsilon() const noexcept { return epsilon_; }

  double clamp(double a) const noexcept {
    return a < epsilon_ ? epsilon_ : (a > 1.0 - epsilon_ ? 1.0 - epsilon_ : a);
  }

  bool operator==(const PNorm&) const = default;

 private:
  enum class Kind { Linear, Square, Cube, General };
  friend double pnorm_complement(double, const PNorm&);
  friend double pnorm_complement_grad(double, double, const PNorm&);

  double p_;
  double epsilon_;
  Kind kind_;
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Derivatives expressed through the activation output y.
inline double sigmoid_grad(double y) { return y * (1.0 - y); }
inline double tanh_grad(double y) { return 1.0 - y * y; }

/// a2 = (1 - a1^p)^(1/p), with a1 and the result clamped to [eps, 1 - eps].
double pnorm_complement(double a1, const PNorm& pn);

/// d a2 / d a1 = -(a1 / a2)^(p - 1) for a clamped forward pair.
double pnorm_complement_grad(double a1, double a2, const PNorm& pn);

/// Element-wise pnorm_complement over a gate matrix.
Matrix pnorm_complement(const Matrix& a1, const PNorm& pn);

/// (a1^p + a2^p)^(1/p) element-wise; 1 when the pair satisfies the relation.
double pnorm_of_pair(double a1, double a2, double p);

}  // namespace pgate
