#pragma once

#include <cstddef>
#include <span>

namespace pgate {

/// F1 of the positive class (label 1).
double f1_binary(std::span<const std::size_t> preds, std::span<const std::size_t> targets);

/// Unweighted mean of per-class F1 over 0..classes-1. A class that appears in
/// neither predictions nor targets is left out of the mean.
double macro_f1(std::span<const std::size_t> preds, std::span<const std::size_t> targets,
                std::size_t classes);

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> targets);

}  // namespace pgate
