#pragma once

// Ungated Elman RNN, h_t = tanh(W x_t + U h_{t-1} + b), with the same one-hot
// input and softmax head as the GRU. Baseline for the long-memory smoke test
// only; the library does not ship it.

#include <array>
#include <cmath>

#include "pgate/activation.hpp"
#include "pgate/gru.hpp"
#include "pgate/param_set.hpp"

namespace pgate::testing {

struct RnnWeights {
  Matrix W, U, b, W_out, b_out;

  std::array<std::pair<std::string_view, Matrix*>, 5> fields() {
    return {{{"W", &W}, {"U", &U}, {"b", &b}, {"W_out", &W_out}, {"b_out", &b_out}}};
  }
  std::array<std::pair<std::string_view, const Matrix*>, 5> fields() const {
    return {{{"W", &W}, {"U", &U}, {"b", &b}, {"W_out", &W_out}, {"b_out", &b_out}}};
  }
};

inline RnnWeights make_rnn(std::size_t vocab, std::size_t hidden, Rng& rng) {
  return {init_weights(hidden, vocab, rng, InitScheme::UniformScaled),
          init_weights(hidden, hidden, rng, InitScheme::UniformScaled),
          init_weights(hidden, 1, rng, InitScheme::Zeros),
          init_weights(vocab, hidden, rng, InitScheme::UniformScaled),
          init_weights(vocab, 1, rng, InitScheme::Zeros)};
}

struct RnnPass {
  std::vector<Matrix> h;      // h[0] = 0, h[t + 1] after input t
  std::vector<Matrix> probs;  // per input position
  double loss = 0.0;          // mean per predicted character
};

/// Equal-length sequences only.
inline RnnPass rnn_forward(const RnnWeights& w, const std::vector<std::vector<std::size_t>>& seqs) {
  const std::size_t batch = seqs.size();
  const std::size_t steps = seqs.front().size() - 1;
  RnnPass pass;
  pass.h.emplace_back(w.U.rows(), batch, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix pre = matmul(w.U, pass.h.back());
    for (std::size_t i = 0; i < pre.rows(); ++i) {
      for (std::size_t j = 0; j < batch; ++j) pre(i, j) = std::tanh(pre(i, j) + w.W(i, seqs[j][t]) + w.b(i, 0));
    }
    pass.h.push_back(pre);
    Matrix probs = softmax_columns(add_col_broadcast(matmul(w.W_out, pre), w.b_out));
    for (std::size_t j = 0; j < batch; ++j) pass.loss -= std::log(probs(seqs[j][t + 1], j));
    pass.probs.push_back(std::move(probs));
  }
  pass.loss /= static_cast<double>(batch * steps);
  return pass;
}

inline RnnWeights rnn_backward(const RnnWeights& w, const RnnPass& pass,
                               const std::vector<std::vector<std::size_t>>& seqs) {
  const std::size_t batch = seqs.size();
  const std::size_t steps = pass.probs.size();
  const double inv = 1.0 / static_cast<double>(batch * steps);
  RnnWeights g = zeros_like(w);
  Matrix dnext(w.U.rows(), batch, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    Matrix dz = pass.probs[t];
    for (std::size_t j = 0; j < batch; ++j) dz(seqs[j][t + 1], j) -= 1.0;
    for (double& v : dz.data()) v *= inv;
    matmul_nt_accumulate(dz, pass.h[t + 1], g.W_out);
    add_inplace(g.b_out, row_sums(dz));
    Matrix dh = add(matmul_tn(w.W_out, dz), dnext);
    const Matrix& h = pass.h[t + 1];
    for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] *= 1.0 - h.data()[i] * h.data()[i];
    matmul_nt_accumulate(dh, pass.h[t], g.U);
    add_inplace(g.b, row_sums(dh));
    for (std::size_t i = 0; i < dh.rows(); ++i) {
      for (std::size_t j = 0; j < batch; ++j) g.W(i, seqs[j][t]) += dh(i, j);
    }
    dnext = matmul_tn(w.U, dh);
  }
  return g;
}

}  // namespace pgate::testing
