#pragma once

// Locale-free, round-trip number formatting for every text output.

#include <charconv>
#include <cmath>
#include <string>

namespace cmclab {

// Shortest text that reads back to the same double; empty for NaN.
inline std::string num(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Quotes a CSV field when it holds a separator, quote or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + '"';
}

}  // namespace cmclab
