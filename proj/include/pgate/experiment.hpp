#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pgate/data.hpp"
#include "pgate/run_io.hpp"
#include "pgate/train.hpp"

namespace pgate {

/// Where vector data comes from and how it is split. Either `path` names a
/// file or `surrogate_samples` > 0 requests the Gaussian-mixture surrogate.
struct VectorDataSpec {
  std::string path;
  std::string format = "csv";  // csv | miniboone
  CsvOptions csv;
  std::size_t surrogate_samples = 0;
  std::size_t surrogate_dim = 50;
  std::uint64_t data_seed = 42;  // surrogate draw and split
  std::optional<std::size_t> train_count;
  std::optional<std::size_t> valid_count;
  double train_fraction = 48700.0 / 60900.0;

  std::string describe() const;
  Metadata metadata() const;
};

struct PreparedVectorData {
  VectorDataset train;
  VectorDataset valid;
  std::optional<Standardizer> standardizer;
};

/// Load or synthesize, split and (optionally) standardize.
PreparedVectorData prepare_vector_data(const VectorDataSpec& spec, bool standardize);

/// Grid of highway runs over p and depth sharing one dataset.
struct SweepSpec {
  std::vector<double> ps;
  std::vector<std::size_t> depths;
  TrainConfig base;
  VectorDataSpec data;
  std::string output = "sweep";
  std::optional<double> benchmark;
  std::size_t jobs = 1;
};

/// Parses the JSON sweep description. Unknown keys are rejected.
SweepSpec parse_sweep_spec(const std::string& json_text);

/// Per-cell seed derived from the base seed, p and depth.
std::uint64_t cell_seed(std::uint64_t base_seed, double p, std::size_t depth);

struct SweepCell {
  double p = 0.0;
  std::size_t depth = 0;
  TrainConfig config;
  RunLog log;
  std::string error;  // non-empty when the cell threw
  std::optional<std::size_t> epochs_to_benchmark;

  bool failed() const { return log.diverged || !error.empty(); }
  std::optional<double> final_metric() const;
};

inline constexpr const char* kSweepSummaryHeader = "p,depth,final_metric,epochs_to_benchmark,diverged_flag";

/// Cells enumerated p-major in spec order.
std::vector<SweepCell> sweep_cells(const SweepSpec& spec);

/// Runs every cell, up to spec.jobs at a time. Hooks may be called from
/// several threads at once. A failing cell is recorded, never fatal.
std::vector<SweepCell> run_sweep(const SweepSpec& spec, const PreparedVectorData& data,
                                 const TrainHooks& hooks = {},
                                 const std::function<void(const SweepCell&)>& on_cell = {});

/// Writes <output>/summary.csv and one directory per cell with runlog.csv
/// and metadata.txt.
void write_sweep_outputs(const SweepSpec& spec, const std::vector<SweepCell>& cells);
void write_sweep_summary(std::ostream& out, const std::vector<SweepCell>& cells);

std::string cell_directory_name(double p, std::size_t depth);

}  // namespace pgate
