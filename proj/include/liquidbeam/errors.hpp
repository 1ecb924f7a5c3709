#pragma once

#include <stdexcept>
#include <string>

namespace lb {

/// Shape or dimension mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A VarId that does not belong to the graph, or a malformed tape.
class GraphIntegrityError : public std::logic_error {
 public:
  explicit GraphIntegrityError(const std::string& what) : std::logic_error(what) {}
};

/// Cholesky breakdown or a matrix outside its required class (Hermitian PD).
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, int pivot)
      : std::runtime_error(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  int pivot() const noexcept { return pivot_; }

 private:
  int pivot_;
};

/// Caller violated a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Input that is structurally valid but degenerate (e.g. an all-zero channel).
class DegenerateInputError : public std::invalid_argument {
 public:
  explicit DegenerateInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite gradient entries; carries the offending parameter name.
class GradientExplosionError : public std::runtime_error {
 public:
  explicit GradientExplosionError(const std::string& param)
      : std::runtime_error("non-finite gradient for parameter '" + param + "'"), param_(param) {}
  const std::string& param() const noexcept { return param_; }

 private:
  std::string param_;
};

/// Persistent hidden state does not match the incoming batch shape.
class StateShapeError : public std::logic_error {
 public:
  explicit StateShapeError(const std::string& what) : std::logic_error(what) {}
};

/// Malformed or unknown key in a config file.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lb
