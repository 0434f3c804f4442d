#pragma once

#include <stdexcept>
#include <string>

namespace csipos {

/// Broad failure class. The CLI maps these one-to-one onto exit codes.
enum class ErrorCategory { usage = 1, config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class ShapeError : public DataError {
 public:
  explicit ShapeError(const std::string& what) : DataError(what) {}
};

/// Non-finite values, singular geometry, divergence.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, int layer = -1)
      : Error(ErrorCategory::numeric, what), layer_(layer) {}

  /// Layer index the failure was detected in, or -1.
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

}  // namespace csipos
