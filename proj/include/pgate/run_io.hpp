#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pgate/train.hpp"

namespace pgate {

/// Bumped whenever numerics change in a way that alters run logs.
inline constexpr const char* kBuildVersion = "pgate-1.0.0";

inline constexpr const char* kRunLogHeader = "epoch,train_loss_nats,valid_metric,seconds";

/// One row per epoch under kRunLogHeader; doubles are written in shortest
/// round-trip form.
void write_runlog_csv(std::ostream& out, const RunLog& log);
RunLog read_runlog_csv(std::istream& in);

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Sidecar `key=value` lines: the full config, PRNG identifier, build version
/// and the run outcome.
Metadata run_metadata(const TrainConfig& config, const RunLog& log);
void write_metadata(std::ostream& out, const Metadata& meta);
std::map<std::string, std::string> read_metadata(std::istream& in);

}  // namespace pgate
