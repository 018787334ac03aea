#include "pgate/gru.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pgate/activation.hpp"
#include "pgate/param_set.hpp"

namespace pgate {

namespace {

void expect_shape(const char* name, const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("GruParams: ") + name + " has shape " + m.shape_string() +
                         ", expected (" + std::to_string(rows) + "x" + std::to_string(cols) +
                         ")");
  }
}

bool at_clamp(double a, const PNorm& pn) {
  return a <= pn.epsilon() || a >= 1.0 - pn.epsilon();
}

/// pre = W[:, input_j] + U h_prev + b, column by column.
Matrix gate_preactivation(const Matrix& W, const Matrix& U, const Matrix& b,
                          std::span<const std::size_t> input, const Matrix& h_prev) {
  Matrix pre = matmul(U, h_prev);
  for (std::size_t i = 0; i < pre.rows(); ++i) {
    auto row = pre.row(i);
    const auto wrow = W.row(i);
    const double bias = b(i, 0);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += wrow[input[j]] + bias;
  }
  return pre;
}

/// dW[:, input_j] += delta[:, j]
void accumulate_columns(Matrix& dW, const Matrix& delta, std::span<const std::size_t> input) {
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    auto drow = dW.row(i);
    const auto src = delta.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) drow[input[j]] += src[j];
  }
}

}  // namespace

void GruParams::validate() const {
  const std::size_t v = vocab();
  const std::size_t k = hidden();
  if (v == 0 || k == 0) throw DimensionError("GruParams: empty weights");
  const auto& w = weights;
  expect_shape("W_r", w.W_r, k, v);
  expect_shape("U_r", w.U_r, k, k);
  expect_shape("b_r", w.b_r, k, 1);
  expect_shape("W_h", w.W_h, k, v);
  expect_shape("U_h", w.U_h, k, k);
  expect_shape("b_h", w.b_h, k, 1);
  expect_shape("W_a", w.W_a, k, v);
  expect_shape("U_a", w.U_a, k, k);
  expect_shape("b_a", w.b_a, k, 1);
  expect_shape("W_out", w.W_out, v, k);
  expect_shape("b_out", w.b_out, v, 1);
}

GruParams make_gru(std::size_t vocab, std::size_t hidden, const PNorm& pn, Rng& rng) {
  GruParams params;
  params.pn = pn;
  auto& w = params.weights;
  for (auto* group : {&w.W_r, &w.W_h, &w.W_a}) {
    *group = init_weights(hidden, vocab, rng, InitScheme::UniformScaled);
  }
  for (auto* group : {&w.U_r, &w.U_h, &w.U_a}) {
    *group = init_weights(hidden, hidden, rng, InitScheme::UniformScaled);
  }
  for (auto* group : {&w.b_r, &w.b_h, &w.b_a}) {
    *group = init_weights(hidden, 1, rng, InitScheme::Zeros);
  }
  w.W_out = init_weights(vocab, hidden, rng, InitScheme::UniformScaled);
  w.b_out = init_weights(vocab, 1, rng, InitScheme::Zeros);
  return params;
}

GruStep step(const GruParams& params, std::span<const std::size_t> input, const Matrix& h_prev,
             const GruOverride& hook) {
  const auto& w = params.weights;
  const std::size_t k = params.hidden();
  if (h_prev.rows() != k || h_prev.cols() != input.size()) {
    throw DimensionError("gru step: h_prev has shape " + h_prev.shape_string() + ", expected (" +
                         std::to_string(k) + "x" + std::to_string(input.size()) + ")");
  }
  for (std::size_t c : input) {
    if (c >= params.vocab()) {
      throw DataError("gru step: character index " + std::to_string(c) +
                      " outside vocabulary of " + std::to_string(params.vocab()));
    }
  }
  const PNorm& pn = params.pn;

  GruStep s;
  s.input.assign(input.begin(), input.end());
  s.h_prev = h_prev;

  s.r = gate_preactivation(w.W_r, w.U_r, w.b_r, input, h_prev);
  for (double& v : s.r.data()) v = hook.r ? *hook.r : sigmoid(v);

  Matrix gated = hadamard(s.r, h_prev);
  s.candidate = gate_preactivation(w.W_h, w.U_h, w.b_h, input, gated);
  for (double& v : s.candidate.data()) v = std::tanh(v);

  s.a1 = gate_preactivation(w.W_a, w.U_a, w.b_a, input, h_prev);
  s.a2 = Matrix(k, input.size());
  s.h = Matrix(k, input.size());
  auto g1 = s.a1.data();
  auto g2 = s.a2.data();
  auto hv = s.h.data();
  auto cv = s.candidate.data();
  auto pv = h_prev.data();
  for (std::size_t i = 0; i < g1.size(); ++i) {
    g1[i] = hook.a1 ? *hook.a1 : pn.clamp(sigmoid(g1[i]));
    g2[i] = pnorm_complement(g1[i], pn);
    hv[i] = g1[i] * cv[i] + g2[i] * pv[i];
  }
  return s;
}

SequenceTrace forward_sequence(const GruParams& params,
                               std::span<const std::vector<std::size_t>> sequences,
                               const GruOverride& hook) {
  params.validate();
  if (sequences.empty()) throw DataError("forward_sequence: no sequences");
  std::size_t longest = 0;
  for (const auto& seq : sequences) {
    if (seq.size() < 2) throw DataError("forward_sequence: sequences need at least 2 characters");
    for (std::size_t c : seq) {
      if (c >= params.vocab()) {
        throw DataError("forward_sequence: character index " + std::to_string(c) +
                        " outside vocabulary of " + std::to_string(params.vocab()));
      }
    }
    longest = std::max(longest, seq.size());
  }

  const std::size_t batch = sequences.size();
  SequenceTrace trace;
  trace.sequences.assign(sequences.begin(), sequences.end());
  trace.hook = hook;
  const std::size_t positions = longest - 1;
  trace.steps.reserve(positions);
  trace.probs.reserve(positions);

  Matrix h(params.hidden(), batch, 0.0);
  std::vector<std::size_t> input(batch);
  for (std::size_t t = 0; t < positions; ++t) {
    std::vector<std::size_t> target(batch, 0);
    std::vector<unsigned char> active(batch, 0);
    for (std::size_t j = 0; j < batch; ++j) {
      const auto& seq = sequences[j];
      if (t + 1 < seq.size()) {
        input[j] = seq[t];
        target[j] = seq[t + 1];
        active[j] = 1;
      } else {
        input[j] = 0;
      }
    }
    GruStep s = step(params, input, h, hook);
    Matrix logits = add_col_broadcast(matmul(params.weights.W_out, s.h), params.weights.b_out);
    Matrix probs = softmax_columns(logits);
    for (std::size_t j = 0; j < batch; ++j) {
      if (!active[j]) continue;
      trace.loss_sum -= std::log(probs(target[j], j));
      ++trace.predictions;
    }
    h = s.h;
    trace.steps.push_back(std::move(s));
    trace.probs.push_back(std::move(probs));
    trace.targets.push_back(std::move(target));
    trace.mask.push_back(std::move(active));
  }
  return trace;
}

SequenceTrace forward_sequence(const GruParams& params, std::span<const std::size_t> chars,
                               const GruOverride& hook) {
  const std::vector<std::vector<std::size_t>> one{{chars.begin(), chars.end()}};
  return forward_sequence(params, std::span<const std::vector<std::size_t>>(one), hook);
}

GruGrads backward_sequence(const GruParams& params, const SequenceTrace& trace) {
  params.validate();
  const std::size_t k = params.hidden();
  if (trace.steps.empty() || trace.steps.front().h.rows() != k ||
      trace.probs.front().rows() != params.vocab() || trace.steps.size() != trace.probs.size()) {
    throw ConsistencyError("backward_sequence: trace was not produced by these parameters");
  }
  const auto& w = params.weights;
  const PNorm& pn = params.pn;
  const std::size_t batch = trace.sequences.size();
  GruGrads grads = zeros_like(w);
  if (trace.predictions == 0) return grads;
  const double inv_n = 1.0 / static_cast<double>(trace.predictions);

  Matrix dh_next(k, batch, 0.0);
  Matrix dza(k, batch), dzh(k, batch), dzr(k, batch);
  for (std::size_t t = trace.steps.size(); t-- > 0;) {
    const GruStep& s = trace.steps[t];

    Matrix dlogits = trace.probs[t];
    for (std::size_t j = 0; j < batch; ++j) {
      if (!trace.mask[t][j]) {
        for (std::size_t v = 0; v < dlogits.rows(); ++v) dlogits(v, j) = 0.0;
        continue;
      }
      dlogits(trace.targets[t][j], j) -= 1.0;
      for (std::size_t v = 0; v < dlogits.rows(); ++v) dlogits(v, j) *= inv_n;
    }
    matmul_nt_accumulate(dlogits, s.h, grads.W_out);
    add_inplace(grads.b_out, row_sums(dlogits));

    Matrix dh = matmul_tn(w.W_out, dlogits);
    add_inplace(dh, dh_next);

    // h = a1 * cand + a2(a1) * h_prev
    Matrix dh_prev(k, batch);
    auto dhv = dh.data();
    auto dpv = dh_prev.data();
    auto dzav = dza.data();
    auto dzhv = dzh.data();
    auto g1 = s.a1.data();
    auto g2 = s.a2.data();
    auto cv = s.candidate.data();
    auto pv = s.h_prev.data();
    const bool a1_free = !trace.hook.a1;
    for (std::size_t i = 0; i < dhv.size(); ++i) {
      double da1 = dhv[i] * cv[i];
      if (!at_clamp(g2[i], pn)) da1 += dhv[i] * pv[i] * pnorm_complement_grad(g1[i], g2[i], pn);
      dzav[i] = (a1_free && !at_clamp(g1[i], pn)) ? da1 * sigmoid_grad(g1[i]) : 0.0;
      dzhv[i] = dhv[i] * g1[i] * tanh_grad(cv[i]);
      dpv[i] = dhv[i] * g2[i];
    }

    // Candidate: tanh(W_h x + U_h (r * h_prev) + b_h)
    const Matrix gated = hadamard(s.r, s.h_prev);
    accumulate_columns(grads.W_h, dzh, s.input);
    matmul_nt_accumulate(dzh, gated, grads.U_h);
    add_inplace(grads.b_h, row_sums(dzh));
    const Matrix dgated = matmul_tn(w.U_h, dzh);

    auto dgv = dgated.data();
    auto rv = s.r.data();
    auto dzrv = dzr.data();
    const bool r_free = !trace.hook.r;
    for (std::size_t i = 0; i < dgv.size(); ++i) {
      dpv[i] += dgv[i] * rv[i];
      dzrv[i] = r_free ? dgv[i] * pv[i] * sigmoid_grad(rv[i]) : 0.0;
    }

    accumulate_columns(grads.W_a, dza, s.input);
    matmul_nt_accumulate(dza, s.h_prev, grads.U_a);
    add_inplace(grads.b_a, row_sums(dza));
    add_inplace(dh_prev, matmul_tn(w.U_a, dza));

    accumulate_columns(grads.W_r, dzr, s.input);
    matmul_nt_accumulate(dzr, s.h_prev, grads.U_r);
    add_inplace(grads.b_r, row_sums(dzr));
    add_inplace(dh_prev, matmul_tn(w.U_r, dzr));

    dh_next = std::move(dh_prev);
  }
  return grads;
}

double corpus_nll(const GruParams& params, std::span<const std::vector<std::size_t>> corpus,
                  std::size_t batch) {
  if (corpus.empty()) throw DataError("corpus_nll: empty evaluation corpus");
  if (batch == 0) batch = 1;
  double loss_sum = 0.0;
  std::size_t predictions = 0;
  for (std::size_t start = 0; start < corpus.size(); start += batch) {
    const std::size_t n = std::min(batch, corpus.size() - start);
    const SequenceTrace trace = forward_sequence(params, corpus.subspan(start, n));
    loss_sum += trace.loss_sum;
    predictions += trace.predictions;
  }
  return loss_sum / static_cast<double>(predictions);
}

double bits_per_character(const GruParams& params,
                          std::span<const std::vector<std::size_t>> corpus, std::size_t batch) {
  return corpus_nll(params, corpus, batch) / std::numbers::ln2;
}

}  // namespace pgate
