#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgate/matrix.hpp"

namespace pgate {

/// Candidate-state nonlinearity g. Identity exists for hand-checkable tests.
enum class Nonlinearity { Tanh, Relu, Identity };

Nonlinearity parse_nonlinearity(std::string_view name);
std::string_view to_string(Nonlinearity g);

void apply_inplace(Nonlinearity g, Matrix& m);
/// Derivative of g expressed through its output y = g(u).
double derivative_from_output(Nonlinearity g, double y);

/// Column-wise softmax with max subtraction.
Matrix softmax_columns(const Matrix& logits);

/// Mean of -ln probs(target_j, j) over columns.
double mean_nll(const Matrix& probs, std::span<const std::size_t> targets);

/// Argmax of each column.
std::vector<std::size_t> argmax_columns(const Matrix& m);

}  // namespace pgate
