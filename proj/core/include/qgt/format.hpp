#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace qgt {

// Shortest decimal string that round-trips the exact double value.
// Used everywhere a number lands in a text artifact so that identical
// runs produce byte-identical files.
inline std::string format_double(double value) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace qgt
