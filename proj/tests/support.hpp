#pragma once

// Shared oracles for the unit and acceptance suites. Nothing here calls the
// library's matmul or backward passes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "pgate/matrix.hpp"
#include "pgate/param_set.hpp"
#include "pgate/rng.hpp"

namespace pgate::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double bound = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<field>[i]"
  std::size_t checked = 0;
};

/// Central differences of `loss` w.r.t. every entry of every field of
/// `params`, compared against `grads`.
template <ParamSet W>
GradCheckResult finite_difference_check(W params, const W& grads,
                                        const std::function<double(const W&)>& loss,
                                        double step = 1e-5) {
  GradCheckResult result;
  auto fields = params.fields();
  const auto gfields = grads.fields();
  for (std::size_t f = 0; f < fields.size(); ++f) {
    auto values = fields[f].second->data();
    const auto analytic = gfields[f].second->data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss(params);
      values[i] = saved - step;
      const double down = loss(params);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = std::string(fields[f].first) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

/// Largest absolute difference across all fields of two weight bundles.
template <ParamSet W>
double max_field_diff(const W& a, const W& b) {
  const auto fa = a.fields();
  const auto fb = b.fields();
  double m = 0.0;
  for (std::size_t f = 0; f < fa.size(); ++f) m = std::max(m, max_abs_diff(*fa[f].second, *fb[f].second));
  return m;
}

/// Replaces every entry (biases included) with a draw from U(-bound, bound).
template <ParamSet W>
void randomize(W& w, Rng& rng, double bound) {
  for (auto& [name, m] : w.fields()) {
    for (double& v : m->data()) v = rng.uniform(-bound, bound);
  }
}

}  // namespace pgate::testing
