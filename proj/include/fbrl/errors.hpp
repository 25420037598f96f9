#pragma once

#include <stdexcept>
#include <string>

namespace fbrl {

// Malformed input files. Messages carry the offending line number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments to a pure operation (out-of-range index, empty input, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called in a state where it is not defined
// (backward without forward, no available action, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid or degenerate configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Env-level rejection of a forbidden or non-fuel action.
class IllegalActionError : public StateError {
 public:
  using StateError::StateError;
};

}  // namespace fbrl
