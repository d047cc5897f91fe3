#pragma once

#include <stdexcept>
#include <string>

namespace nimbus {

/// Bad command line, malformed configuration or invalid run parameters.
/// The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

/// Unreadable or malformed data file, or data inconsistent with a model.
/// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& message) : std::runtime_error(message) {}
};

/// A computation produced non-finite values. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace nimbus
