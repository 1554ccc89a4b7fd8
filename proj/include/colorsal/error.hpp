#pragma once

#include <stdexcept>
#include <string>

namespace colorsal {

// Base for every error the engine raises. The CLI maps the subclass to an
// exit status (config 2, transport 3, everything else 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, unreadable inputs, malformed user-supplied specs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Shape/range violations, non-finite values, failed property checks.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failure to reach or talk to an external model server.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace colorsal
