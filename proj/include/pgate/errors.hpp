#pragma once

#include <stdexcept>

namespace pgate {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values fed into gate arithmetic.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A trace or gradient does not belong to the given parameters.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed input data: ragged CSV rows, unparseable numbers, out-of-vocabulary
/// indices, empty corpora. Messages carry the offending row where known.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent run configuration (split counts exceeding the data, p <= 0, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pgate
