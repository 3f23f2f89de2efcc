#pragma once

#include <charconv>
#include <string>

namespace lmpe {

/// Shortest round-trip decimal rendering; identical across platforms, which
/// keeps CSV artifacts byte-stable.
inline std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

/// RFC-4180-style quoting, applied only when needed.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace lmpe
