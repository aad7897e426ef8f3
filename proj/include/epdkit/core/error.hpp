#pragma once

#include <stdexcept>
#include <string>

namespace epd {

// Base of every error the toolkit throws. kind() is a short stable token used
// by the CLI for its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Shape or size disagreement between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

// Violated precondition on call order or argument semantics.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message) : Error("contract", message) {}
};

// Argument outside its documented domain (levels, ranges, empty inputs).
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& message) : Error("range", message) {}
};

// Statistic undefined for the given data (e.g. correlation of a constant vector).
class UndefinedError : public Error {
 public:
  explicit UndefinedError(const std::string& message) : Error("undefined", message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error("numeric", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

// Malformed or inconsistent persisted data (manifests, checkpoints, CSVs).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format", message) {}
};

}  // namespace epd
