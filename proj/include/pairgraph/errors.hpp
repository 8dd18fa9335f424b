#pragma once

#include <stdexcept>
#include <string>

namespace pairgraph {

// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line = -1)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Semantically invalid data (nonpositive price, empty result, ...).
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor / vector shape mismatch.
class ShapeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration value or unknown key.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pairgraph
