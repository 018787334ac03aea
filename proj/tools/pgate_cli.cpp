// pgate: train, evaluate and inspect p-norm gated highway and GRU models.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pgate/experiment.hpp"
#include "pgate/format.hpp"
#include "pgate/model_io.hpp"
#include "pgate/run_io.hpp"
#include "pgate/train.hpp"

namespace fs = std::filesystem;
using namespace pgate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Thrown for flag combinations CLI11 cannot express; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  body(out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TrainFlags {
  TrainConfig config;
  std::string nonlinearity = "tanh";
  bool no_standardize = false;
  std::string out = "run";
  bool quiet = false;
};

void add_common_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--p", f.config.p, "Gate norm p (> 0)")->check(CLI::PositiveNumber);
  cmd->add_option("--hidden", f.config.hidden, "Hidden width k")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", f.config.learning_rate, "SGD learning rate")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", f.config.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", f.config.batch, "Minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.config.seed, "Run seed (weights and minibatch order)")->capture_default_str();
  cmd->add_option("--clip-norm", f.config.clip_norm, "Clip gradients to this global norm (0 = off)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_flag("--quiet", f.quiet, "No per-epoch progress");
}

struct VectorDataFlags {
  VectorDataSpec spec;
  std::string delimiter = ",";
  bool label_first = false;
  std::size_t train_count = 0;
  std::size_t valid_count = 0;
};

void add_vector_data_flags(CLI::App* cmd, VectorDataFlags& f, bool with_split) {
  auto* data = cmd->add_option("--data", f.spec.path, "Vector dataset file");
  auto* surrogate = cmd->add_option("--surrogate", f.spec.surrogate_samples,
                                    "Use N samples of the Gaussian-mixture surrogate instead of a file")
                        ->check(CLI::PositiveNumber);
  data->excludes(surrogate);
  cmd->add_option("--surrogate-dim", f.spec.surrogate_dim, "Surrogate feature count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--format", f.spec.format, "Data file format")
      ->check(CLI::IsMember({"csv", "miniboone"}))
      ->capture_default_str();
  cmd->add_option("--delimiter", f.delimiter, "CSV delimiter character, or 'whitespace'")
      ->capture_default_str();
  cmd->add_flag("--header", f.spec.csv.header, "CSV has a header row");
  cmd->add_flag("--label-first", f.label_first, "Label is the first CSV column (default: last)");
  cmd->add_option("--data-seed", f.spec.data_seed, "Seed for the surrogate draw and the split")
      ->capture_default_str();
  if (with_split) {
    cmd->add_option("--train-count", f.train_count, "Training rows (default: fraction split)");
    cmd->add_option("--valid-count", f.valid_count, "Validation rows");
    cmd->add_option("--train-fraction", f.spec.train_fraction, "Training share when no counts are given")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }
}

void finish_vector_data_flags(VectorDataFlags& f) {
  if (f.spec.path.empty() && f.spec.surrogate_samples == 0) {
    throw UsageError("one of --data or --surrogate is required");
  }
  if (f.delimiter == "whitespace") {
    f.spec.csv.whitespace = true;
  } else if (f.delimiter.size() == 1) {
    f.spec.csv.delimiter = f.delimiter[0];
  } else {
    throw UsageError("--delimiter must be a single character or 'whitespace'");
  }
  f.spec.csv.label = f.label_first ? LabelColumn::First : LabelColumn::Last;
  if (f.train_count > 0) {
    f.spec.train_count = f.train_count;
    if (f.valid_count > 0) f.spec.valid_count = f.valid_count;
  }
}

TrainHooks progress_hooks(bool quiet, const std::string& metric_name) {
  TrainHooks hooks;
  if (!quiet) {
    hooks.on_epoch = [metric_name](const EpochRecord& r) {
      std::cerr << "epoch " << r.epoch << "  train_nll " << format_double(r.train_loss) << "  "
                << metric_name << ' ' << format_double(r.valid_metric) << '\n';
    };
  }
  return hooks;
}

void write_run(const fs::path& dir, const RunLog& log, const Metadata& meta) {
  fs::create_directories(dir);
  write_file(dir / "runlog.csv", [&](std::ostream& out) { write_runlog_csv(out, log); });
  write_file(dir / "metadata.txt", [&](std::ostream& out) { write_metadata(out, meta); });
}

// ---------------------------------------------------------------------------

struct TrainVec {
  TrainFlags train;
  VectorDataFlags data;
  double benchmark = -1.0;
  int layers = 10;
};

int run_train_vec(TrainVec& a) {
  finish_vector_data_flags(a.data);
  TrainConfig& cfg = a.train.config;
  cfg.model = ModelKind::Highway;
  cfg.layers = static_cast<std::size_t>(a.layers);
  cfg.g = parse_nonlinearity(a.train.nonlinearity);
  cfg.standardize = !a.train.no_standardize;
  cfg.dataset = a.data.spec.describe();
  cfg.validate();

  const PreparedVectorData data = prepare_vector_data(a.data.spec, cfg.standardize);
  const HighwayRun run =
      sgd_train(cfg, data.train, data.valid, progress_hooks(a.train.quiet, "valid_f1"));

  Metadata meta = run_metadata(cfg, run.log);
  for (auto& kv : a.data.spec.metadata()) meta.push_back(std::move(kv));
  meta.emplace_back("train_rows", std::to_string(data.train.size()));
  meta.emplace_back("valid_rows", std::to_string(data.valid.size()));
  const fs::path dir(a.train.out);
  write_run(dir, run.log, meta);
  write_file(dir / "model.txt", [&](std::ostream& out) {
    save_highway(out, SavedHighway{run.params, data.standardizer, meta});
  });

  std::cout << "seed " << cfg.seed << '\n';
  if (run.log.diverged) {
    std::cout << "diverged at epoch " << *run.log.diverged_epoch << '\n';
  }
  if (!run.log.records.empty()) {
    std::cout << "final " << run.log.metric << ' ' << format_double(run.log.records.back().valid_metric)
              << '\n';
  }
  if (a.benchmark >= 0.0) {
    const auto hit = epochs_to_threshold(run.log, a.benchmark, Direction::AtLeast);
    std::cout << "epochs_to_benchmark " << (hit ? std::to_string(*hit) : "none") << '\n';
  }
  return run.log.diverged ? kExitRuntime : kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainLm {
  TrainFlags train;
  std::string corpus;
  std::size_t synthetic = 0;
  std::size_t train_sents = 10000;
  std::size_t valid_sents = 4000;
  std::uint64_t data_seed = 42;
};

CorpusSplit load_lm_corpus(const TrainLm& a) {
  Rng rng(a.data_seed);
  if (!a.corpus.empty()) return load_corpus(a.corpus, a.train_sents, a.valid_sents, rng);
  std::vector<std::u32string> lines;
  for (const auto& s : synthetic_sentences(a.synthetic, rng)) lines.push_back(decode_utf8(s));
  return build_corpus(std::move(lines), a.train_sents, a.valid_sents, rng);
}

int run_train_lm(TrainLm& a) {
  if (a.corpus.empty() && a.synthetic == 0) throw UsageError("one of --corpus or --synthetic is required");
  TrainConfig& cfg = a.train.config;
  cfg.model = ModelKind::Gru;
  cfg.dataset = a.corpus.empty() ? "synthetic:" + std::to_string(a.synthetic) : "text:" + a.corpus;
  cfg.validate();

  const CorpusSplit corpus = load_lm_corpus(a);
  const GruRun run = sgd_train(cfg, corpus.train, corpus.valid, progress_hooks(a.train.quiet, "bpc"));

  Metadata meta = run_metadata(cfg, run.log);
  meta.emplace_back("data_seed", std::to_string(a.data_seed));
  meta.emplace_back("train_sentences", std::to_string(corpus.train.sequences.size()));
  meta.emplace_back("valid_sentences", std::to_string(corpus.valid.sequences.size()));
  meta.emplace_back("vocab_size", std::to_string(corpus.train.vocab.size()));
  meta.emplace_back("truncated_sentences",
                    std::to_string(corpus.train.truncated + corpus.valid.truncated));
  meta.emplace_back("dropped_sentences", std::to_string(corpus.train.dropped + corpus.valid.dropped));
  const fs::path dir(a.train.out);
  write_run(dir, run.log, meta);
  write_file(dir / "model.txt",
             [&](std::ostream& out) { save_gru(out, SavedGru{run.params, corpus.train.vocab, meta}); });

  std::cout << "seed " << cfg.seed << '\n';
  if (run.log.diverged) std::cout << "diverged at epoch " << *run.log.diverged_epoch << '\n';
  if (!run.log.records.empty()) {
    std::cout << "final bpc " << format_double(run.log.records.back().valid_metric) << '\n';
  }
  return run.log.diverged ? kExitRuntime : kExitOk;
}

// ---------------------------------------------------------------------------

struct Sweep {
  std::string spec_file;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::string> out;
  bool quiet = false;
};

int run_sweep_cmd(Sweep& a) {
  SweepSpec spec = parse_sweep_spec(read_file(a.spec_file));
  if (a.jobs) spec.jobs = *a.jobs;
  if (a.epochs) spec.base.epochs = *a.epochs;
  if (a.seed) spec.base.seed = *a.seed;
  if (a.lr) spec.base.learning_rate = *a.lr;
  if (a.out) spec.output = *a.out;
  if (spec.jobs == 0) throw UsageError("--jobs must be positive");
  spec.base.validate();

  const PreparedVectorData data = prepare_vector_data(spec.data, spec.base.standardize);
  std::cout << "seed " << spec.base.seed << '\n';
  const auto cells = run_sweep(spec, data, {}, [&](const SweepCell& cell) {
    if (a.quiet) return;
    std::cerr << "p=" << format_double(cell.p) << " depth=" << cell.depth;
    if (!cell.error.empty()) {
      std::cerr << " error: " << cell.error;
    } else if (cell.log.diverged) {
      std::cerr << " diverged";
    } else if (const auto m = cell.final_metric()) {
      std::cerr << ' ' << cell.log.metric << ' ' << format_double(*m);
    }
    std::cerr << '\n';
  });
  write_sweep_outputs(spec, cells);
  std::size_t failed = 0;
  for (const auto& c : cells) failed += c.failed();
  std::cout << cells.size() << " cells, " << failed << " failed; summary at "
            << (fs::path(spec.output) / "summary.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Reads one feature row either inline or by index from a data file.
std::vector<double> input_row(const std::string& inline_row, VectorDataFlags& data, std::size_t index) {
  if (!inline_row.empty()) {
    std::vector<double> row;
    std::stringstream ss(inline_row);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double_strict(cell, "--row value"));
    return row;
  }
  finish_vector_data_flags(data);
  Rng rng(data.spec.data_seed);
  const VectorDataset ds = data.spec.surrogate_samples > 0
                               ? make_gaussian_surrogate(data.spec.surrogate_samples, data.spec.surrogate_dim, rng)
                           : data.spec.format == "miniboone" ? load_miniboone(data.spec.path)
                                                             : load_csv(data.spec.path, data.spec.csv);
  if (index >= ds.size()) {
    throw DataError("--index " + std::to_string(index) + " is past the last row (" +
                    std::to_string(ds.size()) + " rows)");
  }
  const auto r = ds.features.row(index);
  return {r.begin(), r.end()};
}

void write_gate_csv(const fs::path& path, const std::vector<Matrix>& gates) {
  write_file(path, [&](std::ostream& out) {
    const std::size_t k = gates.empty() ? 0 : gates.front().rows();
    for (std::size_t i = 0; i < k; ++i) out << (i ? "," : "") << "unit" << i + 1;
    out << '\n';
    for (const auto& layer : gates) {
      for (std::size_t i = 0; i < k; ++i) out << (i ? "," : "") << format_double(layer(i, 0));
      out << '\n';
    }
  });
}

struct GateDump {
  std::string model;
  std::string row;
  VectorDataFlags data;
  std::size_t index = 0;
  std::string out = "gates";
};

int run_gate_dump(GateDump& a) {
  if (a.row.empty() && a.data.spec.path.empty() && a.data.spec.surrogate_samples == 0) {
    throw UsageError("give --row, or --data/--surrogate with --index");
  }
  std::ifstream in(a.model);
  if (!in) throw DataError("cannot open '" + a.model + "'");
  const SavedHighway model = load_highway(in);
  std::vector<double> row = input_row(a.row, a.data, a.index);
  if (row.size() != model.params.input_dim()) {
    throw DimensionError("input row has " + std::to_string(row.size()) + " features, model expects " +
                         std::to_string(model.params.input_dim()));
  }
  Matrix x = Matrix::from_data(1, row.size(), row);
  if (model.standardizer) model.standardizer->apply(x);
  const HighwayTrace trace = forward(model.params, transpose(x));

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_gate_csv(dir / "alpha1.csv", trace.a1);
  write_gate_csv(dir / "alpha2.csv", trace.a2);
  std::cout << "wrote " << trace.a1.size() << "x" << model.params.hidden() << " gate matrices to "
            << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct Eval {
  std::string model;
  VectorDataFlags data;
  std::string corpus;
};

int run_eval(Eval& a) {
  const std::string kind = peek_model_kind(a.model);
  std::ifstream in(a.model);
  if (kind == "highway") {
    finish_vector_data_flags(a.data);
    const SavedHighway model = load_highway(in);
    Rng rng(a.data.spec.data_seed);
    VectorDataset ds = a.data.spec.surrogate_samples > 0
                           ? make_gaussian_surrogate(a.data.spec.surrogate_samples, a.data.spec.surrogate_dim, rng)
                       : a.data.spec.format == "miniboone" ? load_miniboone(a.data.spec.path)
                                                           : load_csv(a.data.spec.path, a.data.spec.csv);
    if (ds.dim() != model.params.input_dim()) {
      throw DimensionError("data has " + std::to_string(ds.dim()) + " features, model expects " +
                           std::to_string(model.params.input_dim()));
    }
    if (model.standardizer) model.standardizer->apply(ds.features);
    const double metric = classification_metric(model.params, ds);
    std::cout << (std::max(ds.classes, model.params.classes()) == 2 ? "f1 " : "macro_f1 ")
              << format_double(metric) << '\n';
    return kExitOk;
  }
  if (a.corpus.empty()) throw UsageError("gru models are evaluated on --corpus");
  const SavedGru model = load_gru(in);
  std::ifstream text(a.corpus);
  if (!text) throw DataError("cannot open '" + a.corpus + "'");
  std::vector<std::u32string> lines;
  std::string line;
  while (std::getline(text, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(decode_utf8(line));
  }
  const CharCorpus corpus = encode_corpus(model.vocab, lines);
  std::cout << "bpc " << format_double(bits_per_character(model.params, corpus.sequences)) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-norm gated highway networks and GRUs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kBuildVersion);

  TrainVec tv;
  tv.train.config.learning_rate = TrainConfig::kHighwayLearningRate;
  auto* cmd_tv = app.add_subcommand("train-vec", "Train a highway classifier on vector data");
  add_common_train_flags(cmd_tv, tv.train);
  add_vector_data_flags(cmd_tv, tv.data, true);
  cmd_tv->add_option("--layers", tv.layers, "Depth T, counting the input layer")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();
  cmd_tv->add_option("--nonlinearity", tv.train.nonlinearity, "Candidate nonlinearity")
      ->check(CLI::IsMember({"tanh", "relu", "identity"}))
      ->capture_default_str();
  cmd_tv->add_option("--gate-bias", tv.train.config.gate_bias, "Initial gate bias")->capture_default_str();
  cmd_tv->add_flag("--no-standardize", tv.train.no_standardize, "Use raw features");
  cmd_tv->add_option("--benchmark-f1", tv.benchmark, "Report the first epoch reaching this validation F1")
      ->check(CLI::Range(0.0, 1.0));

  TrainLm lm;
  lm.train.config.learning_rate = TrainConfig::kGruLearningRate;
  lm.train.config.hidden = 400;
  lm.train.config.epochs = 50;
  lm.train.config.batch = 32;
  auto* cmd_lm = app.add_subcommand("train-lm", "Train a character-level GRU language model");
  add_common_train_flags(cmd_lm, lm.train);
  auto* corpus_opt = cmd_lm->add_option("--corpus", lm.corpus, "UTF-8 text, one sentence per line");
  cmd_lm->add_option("--synthetic", lm.synthetic, "Generate N synthetic sentences instead of a corpus")
      ->check(CLI::PositiveNumber)
      ->excludes(corpus_opt);
  cmd_lm->add_option("--train-sents", lm.train_sents, "Training sentences")->capture_default_str();
  cmd_lm->add_option("--valid-sents", lm.valid_sents, "Validation sentences")->capture_default_str();
  cmd_lm->add_option("--data-seed", lm.data_seed, "Seed for sentence sampling")->capture_default_str();

  Sweep sw;
  auto* cmd_sw = app.add_subcommand("sweep", "Run a p x depth grid of highway trainings");
  cmd_sw->add_option("spec", sw.spec_file, "JSON sweep description")->required()->check(CLI::ExistingFile);
  cmd_sw->add_option("--jobs", sw.jobs, "Cells trained concurrently")->check(CLI::PositiveNumber);
  cmd_sw->add_option("--epochs", sw.epochs, "Override the spec's epochs")->check(CLI::PositiveNumber);
  cmd_sw->add_option("--seed", sw.seed, "Override the spec's base seed (default 42)");
  cmd_sw->add_option("--lr", sw.lr, "Override the spec's learning rate")->check(CLI::NonNegativeNumber);
  cmd_sw->add_option("--out", sw.out, "Override the spec's output directory");
  cmd_sw->add_flag("--quiet", sw.quiet, "No per-cell progress");

  GateDump gd;
  auto* cmd_gd = app.add_subcommand("gate-dump", "Write both gates of a highway model for one input");
  cmd_gd->add_option("--model", gd.model, "Saved highway model")->required();
  cmd_gd->add_option("--row", gd.row, "Comma-separated raw feature values");
  add_vector_data_flags(cmd_gd, gd.data, false);
  cmd_gd->add_option("--index", gd.index, "Row of the data file to use")->capture_default_str();
  cmd_gd->add_option("--out", gd.out, "Output directory")->capture_default_str();

  Eval ev;
  auto* cmd_ev = app.add_subcommand("eval", "Score a saved model on a dataset or corpus");
  cmd_ev->add_option("--model", ev.model, "Saved model")->required();
  add_vector_data_flags(cmd_ev, ev.data, false);
  cmd_ev->add_option("--corpus", ev.corpus, "Text corpus for gru models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_tv->parsed()) return run_train_vec(tv);
    if (cmd_lm->parsed()) return run_train_lm(lm);
    if (cmd_sw->parsed()) return run_sweep_cmd(sw);
    if (cmd_gd->parsed()) return run_gate_dump(gd);
    if (cmd_ev->parsed()) return run_eval(ev);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
