#pragma once

#include <string>
#include <string_view>

namespace pgate {

/// Shortest text that parses back to the identical double.
std::string format_double(double v);

/// Strict whole-string parse; throws DataError naming `what` on failure.
double parse_double_strict(std::string_view text, std::string_view what);

}  // namespace pgate
