#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clwe {

// Exit-status mapping used by the CLI: usage 1, data format 2, numerical 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data. Carries the offending file and line
/// when known (line 0 means "not line-specific").
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
  DataError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

/// Non-finite parameters, typically from a learning rate that is too high.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace clwe
