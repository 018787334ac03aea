#include "pgate/experiment.hpp"

#include <atomic>
#include <bit>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "pgate/format.hpp"

namespace pgate {

namespace {

using Json = nlohmann::json;

void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("sweep spec: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("sweep spec: unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read_if(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void write_text_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  body(out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string VectorDataSpec::describe() const {
  if (surrogate_samples > 0) {
    return "surrogate:n=" + std::to_string(surrogate_samples) + ",d=" + std::to_string(surrogate_dim);
  }
  return format + ":" + path;
}

Metadata VectorDataSpec::metadata() const {
  Metadata meta{{"data_seed", std::to_string(data_seed)}};
  if (train_count) {
    meta.emplace_back("train_count", std::to_string(*train_count));
    meta.emplace_back("valid_count", valid_count ? std::to_string(*valid_count) : "");
  } else {
    meta.emplace_back("train_fraction", format_double(train_fraction));
  }
  return meta;
}

PreparedVectorData prepare_vector_data(const VectorDataSpec& spec, bool standardize_features) {
  Rng rng(spec.data_seed);
  VectorDataset all;
  if (spec.surrogate_samples > 0) {
    all = make_gaussian_surrogate(spec.surrogate_samples, spec.surrogate_dim, rng);
  } else if (spec.path.empty()) {
    throw ConfigError("no data source: give a path or a surrogate size");
  } else if (spec.format == "miniboone") {
    all = load_miniboone(spec.path);
  } else if (spec.format == "csv") {
    all = load_csv(spec.path, spec.csv);
  } else {
    throw ConfigError("unknown data format '" + spec.format + "'");
  }

  DatasetSplit split;
  if (spec.train_count) {
    const std::size_t valid = spec.valid_count.value_or(all.size() - std::min(all.size(), *spec.train_count));
    split = split_counts(all, *spec.train_count, valid, rng);
  } else {
    split = split_fraction(all, spec.train_fraction, rng);
  }
  PreparedVectorData out{std::move(split.train), std::move(split.valid), std::nullopt};
  if (standardize_features) out.standardizer = standardize(out.train, out.valid);
  return out;
}

SweepSpec parse_sweep_spec(const std::string& json_text) {
  SweepSpec spec;
  try {
    const Json root = Json::parse(json_text);
    reject_unknown_keys(root, {"p", "depths", "base", "data", "output", "benchmark_f1", "jobs"}, "spec");
    spec.ps = root.at("p").get<std::vector<double>>();
    spec.depths = root.at("depths").get<std::vector<std::size_t>>();
    read_if(root, "output", spec.output);
    read_if(root, "jobs", spec.jobs);
    if (root.contains("benchmark_f1")) spec.benchmark = root.at("benchmark_f1").get<double>();

    if (root.contains("base")) {
      const Json& base = root.at("base");
      reject_unknown_keys(base,
                          {"hidden", "learning_rate", "epochs", "batch", "seed", "nonlinearity",
                           "standardize", "gate_bias", "clip_norm"},
                          "base");
      TrainConfig& c = spec.base;
      read_if(base, "hidden", c.hidden);
      read_if(base, "learning_rate", c.learning_rate);
      read_if(base, "epochs", c.epochs);
      read_if(base, "batch", c.batch);
      read_if(base, "seed", c.seed);
      read_if(base, "standardize", c.standardize);
      read_if(base, "gate_bias", c.gate_bias);
      read_if(base, "clip_norm", c.clip_norm);
      if (base.contains("nonlinearity")) {
        c.g = parse_nonlinearity(base.at("nonlinearity").get<std::string>());
      }
    }
    if (root.contains("data")) {
      const Json& data = root.at("data");
      reject_unknown_keys(data,
                          {"path", "format", "delimiter", "header", "label_column", "surrogate_samples",
                           "surrogate_dim", "data_seed", "train_count", "valid_count", "train_fraction"},
                          "data");
      VectorDataSpec& d = spec.data;
      read_if(data, "path", d.path);
      read_if(data, "format", d.format);
      read_if(data, "header", d.csv.header);
      read_if(data, "surrogate_samples", d.surrogate_samples);
      read_if(data, "surrogate_dim", d.surrogate_dim);
      read_if(data, "data_seed", d.data_seed);
      read_if(data, "train_fraction", d.train_fraction);
      if (data.contains("train_count")) d.train_count = data.at("train_count").get<std::size_t>();
      if (data.contains("valid_count")) d.valid_count = data.at("valid_count").get<std::size_t>();
      if (data.contains("delimiter")) {
        const auto delim = data.at("delimiter").get<std::string>();
        if (delim == "whitespace") {
          d.csv.whitespace = true;
        } else if (delim.size() == 1) {
          d.csv.delimiter = delim[0];
        } else {
          throw ConfigError("sweep spec: delimiter must be one character or 'whitespace'");
        }
      }
      if (data.contains("label_column")) {
        const auto where = data.at("label_column").get<std::string>();
        if (where != "first" && where != "last") {
          throw ConfigError("sweep spec: label_column must be 'first' or 'last'");
        }
        d.csv.label = where == "first" ? LabelColumn::First : LabelColumn::Last;
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("sweep spec: ") + e.what());
  }
  if (spec.ps.empty() || spec.depths.empty()) throw ConfigError("sweep spec: empty p or depth list");
  for (double p : spec.ps) {
    if (!(p > 0.0)) throw ConfigError("sweep spec: every p must be > 0");
  }
  if (spec.jobs == 0) throw ConfigError("sweep spec: jobs must be positive");
  spec.base.model = ModelKind::Highway;
  spec.base.dataset = spec.data.describe();
  return spec;
}

std::uint64_t cell_seed(std::uint64_t base_seed, double p, std::size_t depth) {
  std::uint64_t h = mix_seed(base_seed);
  h = mix_seed(h ^ std::bit_cast<std::uint64_t>(p));
  return mix_seed(h ^ static_cast<std::uint64_t>(depth));
}

std::optional<double> SweepCell::final_metric() const {
  if (log.records.empty()) return std::nullopt;
  return log.records.back().valid_metric;
}

std::string cell_directory_name(double p, std::size_t depth) {
  return "p" + format_double(p) + "_depth" + std::to_string(depth);
}

std::vector<SweepCell> sweep_cells(const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  for (double p : spec.ps) {
    for (std::size_t depth : spec.depths) {
      SweepCell cell;
      cell.p = p;
      cell.depth = depth;
      cell.config = spec.base;
      cell.config.p = p;
      cell.config.layers = depth;
      cell.config.seed = cell_seed(spec.base.seed, p, depth);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

std::vector<SweepCell> run_sweep(const SweepSpec& spec, const PreparedVectorData& data,
                                 const TrainHooks& hooks,
                                 const std::function<void(const SweepCell&)>& on_cell) {
  std::vector<SweepCell> cells = sweep_cells(spec);
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      SweepCell& cell = cells[i];
      try {
        cell.log = sgd_train(cell.config, data.train, data.valid, hooks).log;
        if (spec.benchmark && !cell.log.diverged) {
          cell.epochs_to_benchmark = epochs_to_threshold(cell.log, *spec.benchmark, Direction::AtLeast);
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      if (on_cell) {
        std::lock_guard lock(report);
        on_cell(cell);
      }
    }
  };
  const std::size_t threads = std::min(spec.jobs, cells.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return cells;
}

void write_sweep_summary(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << kSweepSummaryHeader << '\n';
  for (const auto& cell : cells) {
    const auto metric = cell.final_metric();
    out << format_double(cell.p) << ',' << cell.depth << ','
        << (metric ? format_double(*metric) : "") << ','
        << (cell.epochs_to_benchmark ? std::to_string(*cell.epochs_to_benchmark) : "") << ','
        << (cell.failed() ? 1 : 0) << '\n';
  }
}

void write_sweep_outputs(const SweepSpec& spec, const std::vector<SweepCell>& cells) {
  namespace fs = std::filesystem;
  const fs::path root(spec.output);
  fs::create_directories(root);
  for (const auto& cell : cells) {
    const fs::path dir = root / cell_directory_name(cell.p, cell.depth);
    fs::create_directories(dir);
    write_text_file(dir / "runlog.csv", [&](std::ostream& out) { write_runlog_csv(out, cell.log); });
    Metadata meta = run_metadata(cell.config, cell.log);
    for (auto& kv : spec.data.metadata()) meta.push_back(std::move(kv));
    meta.emplace_back("error", cell.error);
    write_text_file(dir / "metadata.txt", [&](std::ostream& out) { write_metadata(out, meta); });
  }
  write_text_file(root / "summary.csv", [&](std::ostream& out) { write_sweep_summary(out, cells); });
}

}  // namespace pgate
