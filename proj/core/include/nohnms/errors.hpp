#pragma once

#include <stdexcept>
#include <string>

namespace nohnms {

/// Raised when caller-supplied data or configuration violates a documented
/// precondition (degenerate box, out-of-range score, missing side-channel).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nohnms
