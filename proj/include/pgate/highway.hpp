#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "pgate/activation.hpp"
#include "pgate/errors.hpp"
#include "pgate/gates.hpp"
#include "pgate/matrix.hpp"
#include "pgate/rng.hpp"

namespace pgate {

/// Learnable matrices of a highway network. The candidate transform (W, b)
/// and the gate transform (U1, c1) are shared by every layer t >= 2; the
/// linearity gate has no parameters of its own.
struct HighwayWeights {
  Matrix W_in, b_in;    // bottom layer, k x d
  Matrix W, b;          // shared candidate transform, k x k
  Matrix U1, c1;        // shared nonlinearity gate, k x k
  Matrix W_out, b_out;  // softmax head, C x k

  std::array<std::pair<std::string_view, Matrix*>, 8> fields() {
    return {{{"W_in", &W_in}, {"b_in", &b_in}, {"W", &W}, {"b", &b},
             {"U1", &U1}, {"c1", &c1}, {"W_out", &W_out}, {"b_out", &b_out}}};
  }
  std::array<std::pair<std::string_view, const Matrix*>, 8> fields() const {
    return {{{"W_in", &W_in}, {"b_in", &b_in}, {"W", &W}, {"b", &b},
             {"U1", &U1}, {"c1", &c1}, {"W_out", &W_out}, {"b_out", &b_out}}};
  }
};

using HighwayGrads = HighwayWeights;

struct HighwayShape {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  std::size_t layers = 0;  // T, counting the bottom layer
};

struct HighwayParams {
  HighwayWeights weights;
  std::size_t layers = 2;
  PNorm pn{1.0};
  Nonlinearity g = Nonlinearity::Tanh;

  std::size_t input_dim() const { return weights.W_in.cols(); }
  std::size_t hidden() const { return weights.W.rows(); }
  std::size_t classes() const { return weights.W_out.rows(); }
  /// Throws DimensionError when field shapes disagree with each other.
  void validate() const;
};

/// Glorot-uniform weights, zero biases except c1 = gate_bias (carry-biased).
HighwayParams make_highway(const HighwayShape& shape, const PNorm& pn, Nonlinearity g, Rng& rng,
                           double gate_bias = -1.0);

/// Test hook pinning gate values. A pinned a1 is used verbatim; a2 is pinned
/// or derived from a1 through the p-norm relation. Pinned gates carry no
/// gradient.
struct GateOverride {
  std::optional<double> a1;
  std::optional<double> a2;
};

/// Every intermediate of one forward pass. h[0] is the bottom layer h_1;
/// candidate[i], a1[i], a2[i] belong to layer t = i + 2.
struct HighwayTrace {
  Matrix input;
  std::vector<Matrix> h;
  std::vector<Matrix> candidate;
  std::vector<Matrix> a1;
  std::vector<Matrix> a2;
  Matrix logits;
  Matrix probs;
  GateOverride hook;

  std::size_t batch() const { return input.cols(); }
};

HighwayTrace forward(const HighwayParams& params, const Matrix& x, const GateOverride& hook = {});

/// Gradients of the mean NLL over the batch for every field.
HighwayGrads backward(const HighwayParams& params, const HighwayTrace& trace,
                      std::span<const std::size_t> targets);

std::vector<std::size_t> predict(const HighwayParams& params, const Matrix& x);
double nll(const HighwayTrace& trace, std::span<const std::size_t> targets);

}  // namespace pgate
