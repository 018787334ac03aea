#include "pgate/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "pgate/format.hpp"
#include "pgate/metrics.hpp"
#include "pgate/param_set.hpp"

namespace pgate {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <ParamSet W>
bool clip(W& grads, double clip_norm) {
  if (clip_norm <= 0.0) return false;
  const double norm = global_norm(grads);
  if (norm <= clip_norm) return false;
  scale_inplace(grads, clip_norm / norm);
  return true;
}

void mark_diverged(RunLog& log, std::size_t epoch) {
  log.diverged = true;
  log.diverged_epoch = epoch;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::Highway ? "highway" : "gru";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "highway") return ModelKind::Highway;
  if (name == "gru") return ModelKind::Gru;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::describe() const {
  return {
      {"model", std::string(to_string(model))},
      {"p", format_double(p)},
      {"layers", std::to_string(layers)},
      {"hidden", std::to_string(hidden)},
      {"learning_rate", format_double(learning_rate)},
      {"epochs", std::to_string(epochs)},
      {"batch", std::to_string(batch)},
      {"seed", std::to_string(seed)},
      {"nonlinearity", std::string(to_string(g))},
      {"standardize", standardize ? "1" : "0"},
      {"gate_bias", format_double(gate_bias)},
      {"clip_norm", format_double(clip_norm)},
      {"dataset", dataset},
  };
}

void TrainConfig::validate() const {
  if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("p must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (hidden == 0) throw ConfigError("hidden width must be positive");
  if (model == ModelKind::Highway && layers < 2) throw ConfigError("need at least 2 layers");
  if (clip_norm < 0.0) throw ConfigError("clip norm must be non-negative");
}

bool RunLog::same_trajectory(const RunLog& other) const {
  if (records.size() != other.records.size() || metric != other.metric ||
      diverged != other.diverged || diverged_epoch != other.diverged_epoch ||
      clip_events != other.clip_events) {
    return false;
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = other.records[i];
    // Bitwise comparison; NaN never appears in a completed record.
    if (a.epoch != b.epoch || a.train_loss != b.train_loss || a.valid_metric != b.valid_metric) {
      return false;
    }
  }
  return true;
}

Rng init_rng(const TrainConfig& config) { return Rng(config.seed); }
Rng shuffle_rng(const TrainConfig& config) { return Rng(mix_seed(config.seed)); }

double classification_metric(const HighwayParams& params, const VectorDataset& ds) {
  constexpr std::size_t kChunk = 2048;
  std::vector<std::size_t> preds;
  preds.reserve(ds.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    const std::size_t end = std::min(ds.size(), start + kChunk);
    rows.resize(end - start);
    for (std::size_t i = start; i < end; ++i) rows[i - start] = i;
    const Batch b = make_batch(ds, rows);
    const auto p = predict(params, b.x);
    preds.insert(preds.end(), p.begin(), p.end());
  }
  const std::size_t classes = std::max(ds.classes, params.classes());
  return classes == 2 ? f1_binary(preds, ds.labels) : macro_f1(preds, ds.labels, classes);
}

HighwayRun sgd_train(const TrainConfig& config, const VectorDataset& train,
                     const VectorDataset& valid, const TrainHooks& hooks) {
  config.validate();
  if (config.model != ModelKind::Highway) throw ConfigError("sgd_train: config is not a highway run");
  if (train.size() == 0) throw DataError("sgd_train: empty training set");
  if (valid.size() > 0 && valid.dim() != train.dim()) {
    throw DimensionError("sgd_train: train and validation feature counts differ");
  }

  Rng weights_rng = init_rng(config);
  Rng order_rng = shuffle_rng(config);
  HighwayShape shape{train.dim(), config.hidden, std::max<std::size_t>(train.classes, 2),
                     config.layers};
  HighwayRun run{{}, make_highway(shape, PNorm(config.p), config.g, weights_rng, config.gate_bias)};
  RunLog& log = run.log;
  log.metric = shape.classes == 2 ? "f1" : "macro_f1";
  const VectorDataset& eval_set = valid.size() > 0 ? valid : train;

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    double loss_sum = 0.0;
    for (const auto& rows : minibatches(train.size(), config.batch, order_rng)) {
      const Batch batch = make_batch(train, rows);
      const HighwayTrace trace = forward(run.params, batch.x);
      const double loss = nll(trace, batch.labels);
      if (!std::isfinite(loss)) {
        mark_diverged(log, epoch);
        return run;
      }
      if (hooks.on_highway_trace && hooks.trace_every > 0 && step % hooks.trace_every == 0) {
        hooks.on_highway_trace(trace, run.params.pn);
      }
      HighwayGrads grads = backward(run.params, trace, batch.labels);
      if (clip(grads, config.clip_norm)) ++log.clip_events;
      axpy(run.params.weights, -config.learning_rate, grads);
      loss_sum += loss * static_cast<double>(rows.size());
      ++step;
    }
    if (!all_finite(run.params.weights)) {
      mark_diverged(log, epoch);
      return run;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.valid_metric = classification_metric(run.params, eval_set);
    rec.seconds = seconds_since(start);
    log.records.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return run;
}

GruRun sgd_train(const TrainConfig& config, const CharCorpus& train, const CharCorpus& valid,
                 const TrainHooks& hooks) {
  config.validate();
  if (config.model != ModelKind::Gru) throw ConfigError("sgd_train: config is not a gru run");
  if (train.sequences.empty()) throw DataError("sgd_train: training corpus has no sequences");

  Rng weights_rng = init_rng(config);
  Rng order_rng = shuffle_rng(config);
  GruRun run{{}, make_gru(train.vocab.size(), config.hidden, PNorm(config.p), weights_rng)};
  RunLog& log = run.log;
  log.metric = "bpc";
  const auto& eval_set = valid.sequences.empty() ? train.sequences : valid.sequences;

  std::vector<std::vector<std::size_t>> batch_seqs;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    double loss_sum = 0.0;
    std::size_t predictions = 0;
    for (const auto& idx : minibatches(train.sequences.size(), config.batch, order_rng)) {
      batch_seqs.clear();
      for (std::size_t i : idx) batch_seqs.push_back(train.sequences[i]);
      const SequenceTrace trace = forward_sequence(run.params, batch_seqs);
      if (!std::isfinite(trace.loss_sum)) {
        mark_diverged(log, epoch);
        return run;
      }
      if (hooks.on_sequence_trace && hooks.trace_every > 0 && step % hooks.trace_every == 0) {
        hooks.on_sequence_trace(trace, run.params.pn);
      }
      GruGrads grads = backward_sequence(run.params, trace);
      if (clip(grads, config.clip_norm)) ++log.clip_events;
      axpy(run.params.weights, -config.learning_rate, grads);
      loss_sum += trace.loss_sum;
      predictions += trace.predictions;
      ++step;
    }
    if (!all_finite(run.params.weights)) {
      mark_diverged(log, epoch);
      return run;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(predictions);
    rec.valid_metric = bits_per_character(run.params, eval_set);
    rec.seconds = seconds_since(start);
    log.records.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return run;
}

std::optional<std::size_t> epochs_to_threshold(const RunLog& log, double threshold,
                                               Direction direction, LogColumn column) {
  for (const auto& rec : log.records) {
    const double v = column == LogColumn::ValidMetric ? rec.valid_metric : rec.train_loss;
    const bool met = direction == Direction::AtLeast ? v >= threshold : v <= threshold;
    if (met) return rec.epoch;
  }
  return std::nullopt;
}

}  // namespace pgate
