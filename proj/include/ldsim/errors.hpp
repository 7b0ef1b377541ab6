#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Device description violates a geometric or electrical invariant.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Model evaluated outside its validity range, or an unknown model variant.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// State handed to the assembler violates positivity or other invariants.
class StateError : public Error {
 public:
  using Error::Error;
};

class LinearSolveError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Base of all run-plan parsing failures.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConfigSyntaxError : public ConfigError {
 public:
  ConfigSyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : ConfigError(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnknownKeyError : public ConfigError {
 public:
  UnknownKeyError(std::string key, std::string path)
      : ConfigError("unknown configuration key '" + key + "' at '" + path + "'"),
        key_(std::move(key)),
        path_(std::move(path)) {}
  const std::string& key() const { return key_; }
  /// Dotted location, e.g. "device.ldmos.gat_length".
  const std::string& path() const { return path_; }

 private:
  std::string key_;
  std::string path_;
};

class ConfigValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace ldsim
