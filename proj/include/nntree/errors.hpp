#pragma once

#include <stdexcept>
#include <string>

namespace nntree {

/// Shapes of two operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A weight or tree file does not follow its schema. `what()` names the
/// offending field path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Tree materialization would exceed the configured leaf or depth budget.
class LimitError : public std::runtime_error {
 public:
  LimitError(const std::string& message, std::string required)
      : std::runtime_error(message), required_(std::move(required)) {}

  /// Required leaf count written as a power, e.g. "2^30".
  const std::string& required() const noexcept { return required_; }

 private:
  std::string required_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input was routed into a region removed by pruning.
class PrunedRegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nntree
