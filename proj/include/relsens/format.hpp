#ifndef RELSENS_FORMAT_HPP
#define RELSENS_FORMAT_HPP

#include <charconv>
#include <string>

namespace relsens {

// Shortest decimal representation that parses back to the same double, so
// CSV and JSON outputs round-trip bit-exactly.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace relsens

#endif  // RELSENS_FORMAT_HPP
