#include "pgate/highway.hpp"

#include <string>

#include "pgate/param_set.hpp"

namespace pgate {

namespace {

void expect_shape(const char* name, const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("HighwayParams: ") + name + " has shape " +
                         m.shape_string() + ", expected (" + std::to_string(rows) + "x" +
                         std::to_string(cols) + ")");
  }
}

bool at_clamp(double a, const PNorm& pn) {
  return a <= pn.epsilon() || a >= 1.0 - pn.epsilon();
}

}  // namespace

void HighwayParams::validate() const {
  const std::size_t d = input_dim();
  const std::size_t k = hidden();
  const std::size_t c = classes();
  if (d == 0 || k == 0 || c == 0) throw DimensionError("HighwayParams: empty weights");
  if (layers < 2) throw DimensionError("HighwayParams: need at least 2 layers");
  expect_shape("W_in", weights.W_in, k, d);
  expect_shape("b_in", weights.b_in, k, 1);
  expect_shape("W", weights.W, k, k);
  expect_shape("b", weights.b, k, 1);
  expect_shape("U1", weights.U1, k, k);
  expect_shape("c1", weights.c1, k, 1);
  expect_shape("W_out", weights.W_out, c, k);
  expect_shape("b_out", weights.b_out, c, 1);
}

HighwayParams make_highway(const HighwayShape& shape, const PNorm& pn, Nonlinearity g, Rng& rng,
                           double gate_bias) {
  if (shape.layers < 2) throw DimensionError("make_highway: need at least 2 layers");
  const std::size_t d = shape.input_dim;
  const std::size_t k = shape.hidden;
  const std::size_t c = shape.classes;
  HighwayParams params;
  params.layers = shape.layers;
  params.pn = pn;
  params.g = g;
  auto& w = params.weights;
  w.W_in = init_weights(k, d, rng, InitScheme::UniformScaled);
  w.b_in = init_weights(k, 1, rng, InitScheme::Zeros);
  w.W = init_weights(k, k, rng, InitScheme::UniformScaled);
  w.b = init_weights(k, 1, rng, InitScheme::Zeros);
  w.U1 = init_weights(k, k, rng, InitScheme::UniformScaled);
  w.c1 = init_weights(k, 1, rng, InitScheme::Constant, gate_bias);
  w.W_out = init_weights(c, k, rng, InitScheme::UniformScaled);
  w.b_out = init_weights(c, 1, rng, InitScheme::Zeros);
  return params;
}

HighwayTrace forward(const HighwayParams& params, const Matrix& x, const GateOverride& hook) {
  params.validate();
  if (x.rows() != params.input_dim()) {
    throw DimensionError("highway forward: input has shape " + x.shape_string() +
                         ", expected " + std::to_string(params.input_dim()) + " rows");
  }
  const auto& w = params.weights;
  const PNorm& pn = params.pn;
  const std::size_t layers = params.layers;

  HighwayTrace trace;
  trace.input = x;
  trace.hook = hook;
  trace.h.reserve(layers);
  trace.candidate.reserve(layers - 1);
  trace.a1.reserve(layers - 1);
  trace.a2.reserve(layers - 1);

  Matrix h1 = add_col_broadcast(matmul(w.W_in, x), w.b_in);
  apply_inplace(params.g, h1);
  trace.h.push_back(std::move(h1));

  for (std::size_t t = 1; t < layers; ++t) {
    const Matrix& prev = trace.h.back();
    Matrix cand = add_col_broadcast(matmul(w.W, prev), w.b);
    apply_inplace(params.g, cand);
    Matrix a1 = add_col_broadcast(matmul(w.U1, prev), w.c1);
    Matrix a2(a1.rows(), a1.cols());
    Matrix h(a1.rows(), a1.cols());

    auto s = a1.data();
    auto s2 = a2.data();
    auto hv = h.data();
    auto cv = cand.data();
    auto pv = prev.data();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double g1 = hook.a1 ? *hook.a1 : pn.clamp(sigmoid(s[i]));
      const double g2 = hook.a2 ? *hook.a2 : pnorm_complement(g1, pn);
      s[i] = g1;
      s2[i] = g2;
      hv[i] = g1 * cv[i] + g2 * pv[i];
    }
    trace.candidate.push_back(std::move(cand));
    trace.a1.push_back(std::move(a1));
    trace.a2.push_back(std::move(a2));
    trace.h.push_back(std::move(h));
  }

  trace.logits = add_col_broadcast(matmul(w.W_out, trace.h.back()), w.b_out);
  trace.probs = softmax_columns(trace.logits);
  return trace;
}

HighwayGrads backward(const HighwayParams& params, const HighwayTrace& trace,
                      std::span<const std::size_t> targets) {
  params.validate();
  const std::size_t layers = params.layers;
  const std::size_t k = params.hidden();
  const std::size_t batch = trace.batch();
  if (trace.h.size() != layers || trace.a1.size() != layers - 1 ||
      trace.input.rows() != params.input_dim() || trace.h.front().rows() != k ||
      trace.probs.rows() != params.classes()) {
    throw ConsistencyError("highway backward: trace was not produced by these parameters");
  }
  if (targets.size() != batch) {
    throw DimensionError("highway backward: " + std::to_string(targets.size()) +
                         " targets for a batch of " + std::to_string(batch));
  }

  const auto& w = params.weights;
  const PNorm& pn = params.pn;
  HighwayGrads grads = zeros_like(w);

  // dL/dlogits = (P - Y) / B for the mean NLL.
  Matrix dlogits = trace.probs;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    if (targets[j] >= dlogits.rows()) throw DimensionError("highway backward: target out of range");
    dlogits(targets[j], j) -= 1.0;
  }
  for (double& v : dlogits.data()) v *= inv_b;

  matmul_nt_accumulate(dlogits, trace.h.back(), grads.W_out);
  grads.b_out = row_sums(dlogits);
  Matrix dh = matmul_tn(w.W_out, dlogits);

  Matrix du(k, batch);
  Matrix ds(k, batch);
  for (std::size_t t = layers - 1; t >= 1; --t) {
    const Matrix& prev = trace.h[t - 1];
    const Matrix& cand = trace.candidate[t - 1];
    const Matrix& a1 = trace.a1[t - 1];
    const Matrix& a2 = trace.a2[t - 1];
    auto dhv = dh.data();
    auto duv = du.data();
    auto dsv = ds.data();
    auto pv = prev.data();
    auto cv = cand.data();
    auto g1 = a1.data();
    auto g2 = a2.data();
    const bool a1_free = !trace.hook.a1;
    const bool a2_derived = !trace.hook.a2;
    for (std::size_t i = 0; i < dhv.size(); ++i) {
      // h_t = a1 * cand + a2(a1) * prev
      duv[i] = dhv[i] * g1[i] * derivative_from_output(params.g, cv[i]);
      double da1 = dhv[i] * cv[i];
      if (a2_derived && !at_clamp(g2[i], pn)) {
        da1 += dhv[i] * pv[i] * pnorm_complement_grad(g1[i], g2[i], pn);
      }
      dsv[i] = (a1_free && !at_clamp(g1[i], pn)) ? da1 * sigmoid_grad(g1[i]) : 0.0;
      dhv[i] *= g2[i];
    }
    matmul_nt_accumulate(du, prev, grads.W);
    add_inplace(grads.b, row_sums(du));
    matmul_nt_accumulate(ds, prev, grads.U1);
    add_inplace(grads.c1, row_sums(ds));
    add_inplace(dh, matmul_tn(w.W, du));
    add_inplace(dh, matmul_tn(w.U1, ds));
  }

  const Matrix& h1 = trace.h.front();
  auto dhv = dh.data();
  auto hv = h1.data();
  for (std::size_t i = 0; i < dhv.size(); ++i) dhv[i] *= derivative_from_output(params.g, hv[i]);
  matmul_nt_accumulate(dh, trace.input, grads.W_in);
  grads.b_in = row_sums(dh);
  return grads;
}

std::vector<std::size_t> predict(const HighwayParams& params, const Matrix& x) {
  return argmax_columns(forward(params, x).probs);
}

double nll(const HighwayTrace& trace, std::span<const std::size_t> targets) {
  return mean_nll(trace.probs, targets);
}

}  // namespace pgate
