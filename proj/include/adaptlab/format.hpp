#pragma once

#include <charconv>
#include <string>

namespace adaptlab {

/// Shortest-safe decimal form: 17 significant digits, round-trips exactly.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace adaptlab
