#include "pgate/metrics.hpp"

#include <string>
#include <vector>

#include "pgate/errors.hpp"

namespace pgate {

namespace {

void require_equal_lengths(std::span<const std::size_t> preds, std::span<const std::size_t> targets) {
  if (preds.size() != targets.size()) {
    throw DimensionError("metrics: " + std::to_string(preds.size()) + " predictions for " +
                         std::to_string(targets.size()) + " targets");
  }
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_binary(std::span<const std::size_t> preds, std::span<const std::size_t> targets) {
  require_equal_lengths(preds, targets);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == 1;
    const bool t = targets[i] == 1;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  return f1_from_counts(tp, fp, fn);
}

double macro_f1(std::span<const std::size_t> preds, std::span<const std::size_t> targets,
                std::size_t classes) {
  require_equal_lengths(preds, targets);
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= classes || targets[i] >= classes) {
      throw DimensionError("macro_f1: label outside 0.." + std::to_string(classes - 1));
    }
    if (preds[i] == targets[i]) {
      ++tp[preds[i]];
    } else {
      ++fp[preds[i]];
      ++fn[targets[i]];
    }
  }
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    total += f1_from_counts(tp[c], fp[c], fn[c]);
    ++present;
  }
  return present ? total / static_cast<double>(present) : 0.0;
}

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> targets) {
  require_equal_lengths(preds, targets);
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == targets[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace pgate
