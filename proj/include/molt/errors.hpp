#pragma once

#include <stdexcept>
#include <string>

namespace molt {

// Dimension disagreement between operands. Message names both shapes.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A documented precondition was violated by the caller.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be opened or written at all.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed on-disk data. `kind` identifies the failure; no partial loads.
struct FormatError : std::runtime_error {
  enum class Kind { BadMagic, BadVersion, Truncated, Inconsistent, ConfigHashMismatch };
  Kind kind;
  FormatError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

}  // namespace molt
