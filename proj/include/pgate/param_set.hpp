#pragma once

#include <cmath>
#include <concepts>
#include <string_view>

#include "pgate/matrix.hpp"

namespace pgate {

/// A weight bundle exposing its named matrices through fields(); gradients
/// use the same type so updates and norms are generic.
template <typename W>
concept ParamSet = requires(W& w, const W& cw) {
  w.fields();
  cw.fields();
};

template <ParamSet W>
W zeros_like(const W& w) {
  W out = w;
  for (auto& [name, m] : out.fields()) m->fill(0.0);
  return out;
}

/// params <- params + alpha * delta, field by field.
template <ParamSet W>
void axpy(W& params, double alpha, const W& delta) {
  auto dst = params.fields();
  auto src = delta.fields();
  for (std::size_t i = 0; i < dst.size(); ++i) axpy_inplace(*dst[i].second, alpha, *src[i].second);
}

template <ParamSet W>
double global_norm(const W& w) {
  double s = 0.0;
  for (const auto& [name, m] : w.fields()) {
    for (double v : m->data()) s += v * v;
  }
  return std::sqrt(s);
}

template <ParamSet W>
void scale_inplace(W& w, double s) {
  for (auto& [name, m] : w.fields()) {
    for (double& v : m->data()) v *= s;
  }
}

template <ParamSet W>
bool all_finite(const W& w) {
  for (const auto& [name, m] : w.fields()) {
    if (!all_finite(*m)) return false;
  }
  return true;
}

}  // namespace pgate
