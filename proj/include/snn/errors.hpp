#pragma once

#include <stdexcept>

namespace snn {

/// Operand shapes are incompatible with the requested operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operand values lie outside the domain of the operation (e.g. non-binary
/// input to a logical op).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// API misuse: non-scalar loss, empty sequences and the like.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace snn
