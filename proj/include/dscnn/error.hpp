#pragma once

#include <stdexcept>
#include <string>

namespace dscnn {

// Error taxonomy used across the library. All of them derive from
// std::runtime_error so callers that do not care can catch one type.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape of an operand does not match what the operation requires.
struct DimensionError : Error {
  using Error::Error;
};

// A precondition on the value of an argument is violated.
struct DomainError : Error {
  using Error::Error;
};

// A file does not follow the format it claims to be in.
struct FormatError : Error {
  using Error::Error;
};

// Reading or writing a file failed.
struct IoError : Error {
  using Error::Error;
};

// An API contract was broken (e.g. backward on a non-scalar).
struct ContractError : Error {
  using Error::Error;
};

}  // namespace dscnn
