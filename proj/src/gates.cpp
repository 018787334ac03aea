#include "pgate/gates.hpp"

#include <string>

namespace pgate {

PNorm::PNorm(double p, double epsilon) : p_(p), epsilon_(epsilon), kind_(Kind::General) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("PNorm: p must be a finite value > 0, got " + std::to_string(p));
  }
  if (!(epsilon > 0.0) || epsilon > 1e-6) {
    throw std::invalid_argument("PNorm: epsilon must lie in (0, 1e-6]");
  }
  if (p == 1.0) {
    kind_ = Kind::Linear;
  } else if (p == 2.0) {
    kind_ = Kind::Square;
  } else if (p == 3.0) {
    kind_ = Kind::Cube;
  }
}

double pnorm_complement(double a1, const PNorm& pn) {
  if (!std::isfinite(a1)) throw NumericError("pnorm_complement: non-finite gate value");
  const double a = pn.clamp(a1);
  double a2 = 0.0;
  switch (pn.kind_) {
    case PNorm::Kind::Linear:
      a2 = 1.0 - a;
      break;
    case PNorm::Kind::Square:
      a2 = std::sqrt((1.0 - a) * (1.0 + a));
      break;
    case PNorm::Kind::Cube:
      a2 = std::cbrt((1.0 - a) * (1.0 + a + a * a));
      break;
    case PNorm::Kind::General: {
      // 1 - a^p = -expm1(p log a) keeps precision for a near 1.
      double rest = -std::expm1(pn.p_ * std::log(a));
      if (rest < pn.epsilon_) rest = pn.epsilon_;
      a2 = std::exp(std::log(rest) / pn.p_);
      break;
    }
  }
  return pn.clamp(a2);
}

double pnorm_complement_grad(double a1, double a2, const PNorm& pn) {
  const double ratio = a1 / a2;
  switch (pn.kind_) {
    case PNorm::Kind::Linear:
      return -1.0;
    case PNorm::Kind::Square:
      return -ratio;
    case PNorm::Kind::Cube:
      return -ratio * ratio;
    case PNorm::Kind::General:
      break;
  }
  return -std::exp((pn.p_ - 1.0) * std::log(ratio));
}

Matrix pnorm_complement(const Matrix& a1, const PNorm& pn) {
  Matrix out(a1.rows(), a1.cols());
  auto src = a1.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = pnorm_complement(src[i], pn);
  return out;
}

double pnorm_of_pair(double a1, double a2, double p) {
  return std::pow(std::pow(a1, p) + std::pow(a2, p), 1.0 / p);
}

}  // namespace pgate
