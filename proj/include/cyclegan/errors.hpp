#pragma once

#include <stdexcept>
#include <string>

namespace cyclegan {

// Base class for every error the engine raises. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not fit an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed layer notation or other textual input.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Run configuration problems. Carries the 1-based line number when the
// problem can be pinned to a line of a config file (0 otherwise).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Non-finite losses and other numeric aborts.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File system failures (unreadable directory, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint files with a bad magic, an unknown version or truncated data.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

}  // namespace cyclegan
