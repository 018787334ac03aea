#include "pgate/format.hpp"

#include <charconv>
#include <cmath>

#include "pgate/errors.hpp"

namespace pgate {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_strict(std::string_view text, std::string_view what) {
  double v = 0.0;
  if (text == "nan") return NAN;
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace pgate
