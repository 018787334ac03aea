#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgate/activation.hpp"
#include "pgate/data.hpp"
#include "pgate/gru.hpp"
#include "pgate/highway.hpp"

namespace pgate {

enum class ModelKind { Highway, Gru };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Every hyperparameter of a run. Two runs with equal configs on the same
/// data produce identical logs.
struct TrainConfig {
  ModelKind model = ModelKind::Highway;
  double p = 1.0;
  std::size_t layers = 10;  // T, highway only
  std::size_t hidden = 50;  // k
  double learning_rate = 0.05;
  std::size_t epochs = 100;
  std::size_t batch = 20;
  std::uint64_t seed = 42;
  Nonlinearity g = Nonlinearity::Tanh;
  bool standardize = true;
  double gate_bias = -1.0;  // initial c1, highway only
  double clip_norm = 0.0;   // 0 disables clipping
  std::string dataset;

  static constexpr double kHighwayLearningRate = 0.05;
  static constexpr double kGruLearningRate = 0.1;

  /// Ordered key/value view, written verbatim into run metadata.
  std::vector<std::pair<std::string, std::string>> describe() const;
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // nats, per-sample (per-character) mean over the epoch
  double valid_metric = 0.0;
  double seconds = 0.0;
};

struct RunLog {
  std::vector<EpochRecord> records;
  std::string metric;  // f1, macro_f1 or bpc
  bool diverged = false;
  std::optional<std::size_t> diverged_epoch;
  std::size_t clip_events = 0;

  /// Equality of everything except wall-clock time.
  bool same_trajectory(const RunLog& other) const;
};

/// Observers invoked on sampled forward traces during training.
struct TrainHooks {
  std::function<void(const HighwayTrace&, const PNorm&)> on_highway_trace;
  std::function<void(const SequenceTrace&, const PNorm&)> on_sequence_trace;
  std::size_t trace_every = 50;  // minibatches between samples
  std::function<void(const EpochRecord&)> on_epoch;
};

struct HighwayRun {
  RunLog log;
  HighwayParams params;
};

struct GruRun {
  RunLog log;
  GruParams params;
};

/// Seed streams used by a run: weight initialization and minibatch order.
Rng init_rng(const TrainConfig& config);
Rng shuffle_rng(const TrainConfig& config);

/// Plain minibatch SGD on a highway classifier. The validation metric is F1
/// for two classes and macro-F1 otherwise.
HighwayRun sgd_train(const TrainConfig& config, const VectorDataset& train,
                     const VectorDataset& valid, const TrainHooks& hooks = {});

/// Plain minibatch SGD on a GRU language model; validation metric is
/// bits-per-character.
GruRun sgd_train(const TrainConfig& config, const CharCorpus& train, const CharCorpus& valid,
                 const TrainHooks& hooks = {});

/// Validation metric used for vector data with `classes` classes.
double classification_metric(const HighwayParams& params, const VectorDataset& ds);

enum class Direction { AtLeast, AtMost };
enum class LogColumn { ValidMetric, TrainLoss };

/// First epoch whose value meets the threshold, or nullopt.
std::optional<std::size_t> epochs_to_threshold(const RunLog& log, double threshold,
                                               Direction direction,
                                               LogColumn column = LogColumn::ValidMetric);

}  // namespace pgate
