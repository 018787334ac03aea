#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "pgate/data.hpp"
#include "pgate/gru.hpp"
#include "pgate/highway.hpp"
#include "pgate/run_io.hpp"

namespace pgate {

/// Text model container, version 1:
///
///   pgate-model 1
///   kind highway|gru
///   meta <key> <value>          (zero or more; run config and provenance)
///   param <name> <value>        (layers, p, epsilon, nonlinearity)
///   matrix <name> <rows> <cols> followed by `rows` lines of values
///   vocab <n> <code point>...   (gru only)
///   end
///
/// Values use shortest round-trip formatting, so a reload is bit-exact.
/// Highway files may carry the input standardizer as the 1 x d matrices
/// standardizer_mean and standardizer_scale.
inline constexpr int kModelFormatVersion = 1;

struct SavedHighway {
  HighwayParams params;
  std::optional<Standardizer> standardizer;
  Metadata meta;
};

struct SavedGru {
  GruParams params;
  Vocabulary vocab;
  Metadata meta;
};

void save_highway(std::ostream& out, const SavedHighway& model);
void save_gru(std::ostream& out, const SavedGru& model);

SavedHighway load_highway(std::istream& in);
SavedGru load_gru(std::istream& in);

/// Reads only the header to tell highway from gru.
std::string peek_model_kind(const std::string& path);

}  // namespace pgate
