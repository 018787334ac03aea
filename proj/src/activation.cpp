#include "pgate/activation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgate {

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "tanh") return Nonlinearity::Tanh;
  if (name == "relu") return Nonlinearity::Relu;
  if (name == "identity") return Nonlinearity::Identity;
  throw std::invalid_argument("unknown nonlinearity '" + std::string(name) +
                              "' (expected tanh, relu or identity)");
}

std::string_view to_string(Nonlinearity g) {
  switch (g) {
    case Nonlinearity::Tanh:
      return "tanh";
    case Nonlinearity::Relu:
      return "relu";
    case Nonlinearity::Identity:
      return "identity";
  }
  return "?";
}

void apply_inplace(Nonlinearity g, Matrix& m) {
  switch (g) {
    case Nonlinearity::Tanh:
      for (double& v : m.data()) v = std::tanh(v);
      break;
    case Nonlinearity::Relu:
      for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Nonlinearity::Identity:
      break;
  }
}

double derivative_from_output(Nonlinearity g, double y) {
  switch (g) {
    case Nonlinearity::Tanh:
      return 1.0 - y * y;
    case Nonlinearity::Relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::Identity:
      return 1.0;
  }
  return 0.0;
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t j = 0; j < logits.cols(); ++j) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < logits.rows(); ++i) mx = std::max(mx, logits(i, j));
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      const double e = std::exp(logits(i, j) - mx);
      out(i, j) = e;
      total += e;
    }
    for (std::size_t i = 0; i < logits.rows(); ++i) out(i, j) /= total;
  }
  return out;
}

double mean_nll(const Matrix& probs, std::span<const std::size_t> targets) {
  if (targets.size() != probs.cols()) {
    throw DimensionError("mean_nll: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(probs.cols()) + " columns");
  }
  if (targets.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (targets[j] >= probs.rows()) throw DimensionError("mean_nll: target out of range");
    total -= std::log(probs(targets[j], j));
  }
  return total / static_cast<double>(targets.size());
}

std::vector<std::size_t> argmax_columns(const Matrix& m) {
  std::vector<std::size_t> out(m.cols(), 0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double best = m(0, j);
    for (std::size_t i = 1; i < m.rows(); ++i) {
      if (m(i, j) > best) {
        best = m(i, j);
        out[j] = i;
      }
    }
  }
  return out;
}

}  // namespace pgate
