#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cco {

// Operand shapes do not line up.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A documented precondition was violated by the caller (e.g. a fully masked
// attention row).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN or Inf produced by an operation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong lifecycle state (e.g. push after flush).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed file content. `offset()` is the byte position where parsing
// stopped making sense.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace cco
