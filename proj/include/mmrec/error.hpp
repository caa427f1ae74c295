#pragma once

#include <stdexcept>
#include <string>

namespace mmrec {

/// Error categories; the CLI maps each to a distinct exit status.
enum class ErrorKind {
  config,    // invalid configuration or dimension mismatch
  data,      // malformed dataset, schema violation, bad input
  training,  // divergence or untrainable setup
  io,        // file system failures
  usage,     // API misuse (e.g. backward without forward)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorKind::training, what) {}
};

/// Non-finite values in a numeric routine.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::training, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Exit status used by the command-line tool for an error kind.
int exit_code(ErrorKind kind) noexcept;

}  // namespace mmrec
