#pragma once

#include <stdexcept>
#include <string>

namespace dynwatch {

// Error taxonomy mirrored by the CLI exit codes: data/validation errors
// exit 2, numerical errors exit 3.
class Error : public std::runtime_error {
 public:
  enum class Kind { data, numerical };

  Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class DataError : public Error {
 public:
  explicit DataError(std::string msg) : Error(Kind::data, std::move(msg)) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(std::string msg) : Error(Kind::numerical, std::move(msg)) {}
};

// Thrown when an operation requires a connected (sub)grid and the active
// topology splits into islands. The message lists the components.
class IslandingError : public NumericalError {
 public:
  explicit IslandingError(std::string msg) : NumericalError(std::move(msg)) {}
};

}  // namespace dynwatch
