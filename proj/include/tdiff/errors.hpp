#pragma once

#include <stdexcept>
#include <string>

namespace tdiff {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the physical or numerical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was not met by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration text or command-line values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdiff
