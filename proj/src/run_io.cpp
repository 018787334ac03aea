#include "pgate/run_io.hpp"

#include <sstream>

#include "pgate/format.hpp"
#include "pgate/rng.hpp"

namespace pgate {

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << kRunLogHeader << '\n';
  for (const auto& rec : log.records) {
    out << rec.epoch << ',' << format_double(rec.train_loss) << ','
        << format_double(rec.valid_metric) << ',' << format_double(rec.seconds) << '\n';
  }
}

RunLog read_runlog_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRunLogHeader) {
    throw DataError("run log: missing header '" + std::string(kRunLogHeader) + "'");
  }
  RunLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      throw DataError("run log row " + std::to_string(line_no) + ": expected 4 fields");
    }
    EpochRecord rec;
    rec.epoch = static_cast<std::size_t>(parse_double_strict(cells[0], "epoch"));
    rec.train_loss = parse_double_strict(cells[1], "train loss");
    rec.valid_metric = parse_double_strict(cells[2], "validation metric");
    rec.seconds = parse_double_strict(cells[3], "seconds");
    log.records.push_back(rec);
  }
  return log;
}

Metadata run_metadata(const TrainConfig& config, const RunLog& log) {
  Metadata meta = config.describe();
  meta.emplace_back("prng", std::string(Rng::kAlgorithm));
  meta.emplace_back("build_version", kBuildVersion);
  meta.emplace_back("metric", log.metric);
  meta.emplace_back("epochs_completed", std::to_string(log.records.size()));
  meta.emplace_back("diverged", log.diverged ? "1" : "0");
  meta.emplace_back("diverged_epoch",
                    log.diverged_epoch ? std::to_string(*log.diverged_epoch) : "");
  meta.emplace_back("clip_events", std::to_string(log.clip_events));
  return meta;
}

void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [key, value] : meta) out << key << '=' << value << '\n';
}

std::map<std::string, std::string> read_metadata(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace pgate
