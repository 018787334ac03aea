#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "pgate/gates.hpp"
#include "pgate/errors.hpp"
#include "pgate/matrix.hpp"
#include "pgate/rng.hpp"

namespace pgate {

/// GRU weights. Inputs are one-hot character indices fed directly (d = V),
/// so each W_* is k x V and W_* x_t is a column lookup.
struct GruWeights {
  Matrix W_r, U_r, b_r;  // reset gate
  Matrix W_h, U_h, b_h;  // candidate state
  Matrix W_a, U_a, b_a;  // update gate a1; a2 follows from the p-norm relation
  Matrix W_out, b_out;   // V x k softmax head

  std::array<std::pair<std::string_view, Matrix*>, 11> fields() {
    return {{{"W_r", &W_r}, {"U_r", &U_r}, {"b_r", &b_r},
             {"W_h", &W_h}, {"U_h", &U_h}, {"b_h", &b_h},
             {"W_a", &W_a}, {"U_a", &U_a}, {"b_a", &b_a},
             {"W_out", &W_out}, {"b_out", &b_out}}};
  }
  std::array<std::pair<std::string_view, const Matrix*>, 11> fields() const {
    return {{{"W_r", &W_r}, {"U_r", &U_r}, {"b_r", &b_r},
             {"W_h", &W_h}, {"U_h", &U_h}, {"b_h", &b_h},
             {"W_a", &W_a}, {"U_a", &U_a}, {"b_a", &b_a},
             {"W_out", &W_out}, {"b_out", &b_out}}};
  }
};

using GruGrads = GruWeights;

struct GruParams {
  GruWeights weights;
  PNorm pn{1.0};

  std::size_t vocab() const { return weights.W_r.cols(); }
  std::size_t hidden() const { return weights.U_r.rows(); }
  void validate() const;
};

/// Glorot-uniform matrices, zero biases.
GruParams make_gru(std::size_t vocab, std::size_t hidden, const PNorm& pn, Rng& rng);

/// Test hook for a single cell: pinned reset or update gate values.
struct GruOverride {
  std::optional<double> r;
  std::optional<double> a1;
};

/// One step for a batch of columns.
struct GruStep {
  std::vector<std::size_t> input;
  Matrix h_prev;
  Matrix r;
  Matrix candidate;
  Matrix a1;
  Matrix a2;
  Matrix h;
};

GruStep step(const GruParams& params, std::span<const std::size_t> input, const Matrix& h_prev,
             const GruOverride& hook = {});

/// Teacher-forced unroll over a batch of sequences. Position t feeds
/// character t and predicts character t + 1; columns whose sequence has
/// ended are masked out of the loss.
struct SequenceTrace {
  std::vector<std::vector<std::size_t>> sequences;
  std::vector<GruStep> steps;
  std::vector<Matrix> probs;
  std::vector<std::vector<std::size_t>> targets;
  std::vector<std::vector<unsigned char>> mask;
  GruOverride hook;
  double loss_sum = 0.0;  // nats, summed over predicted positions
  std::size_t predictions = 0;

  double loss() const {
    return predictions ? loss_sum / static_cast<double>(predictions) : 0.0;
  }
};

SequenceTrace forward_sequence(const GruParams& params,
                               std::span<const std::vector<std::size_t>> sequences,
                               const GruOverride& hook = {});
SequenceTrace forward_sequence(const GruParams& params, std::span<const std::size_t> chars,
                               const GruOverride& hook = {});

/// Full BPTT gradients of trace.loss() (mean per-character NLL).
GruGrads backward_sequence(const GruParams& params, const SequenceTrace& trace);

/// Mean -log2 P(c_t | c_<t) over every predicted position in the corpus.
double bits_per_character(const GruParams& params,
                          std::span<const std::vector<std::size_t>> corpus,
                          std::size_t batch = 64);

/// Same quantity in nats; bits = nats / ln 2.
double corpus_nll(const GruParams& params, std::span<const std::vector<std::size_t>> corpus,
                  std::size_t batch = 64);

}  // namespace pgate
