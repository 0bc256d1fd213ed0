#pragma once

#include <stdexcept>
#include <string>

namespace memcost {

enum class ErrorKind {
  invalid_input,
  configuration,
  conflict,
  backend,
  extraction,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::backend: return "backend error";
    case ErrorKind::extraction: return "extraction error";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

// Base of every error thrown by the library. Callers that care about the
// category switch on kind(); the CLI maps all of them to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& message) : Error(ErrorKind::invalid_input, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::configuration, message) {}
};

class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& message) : Error(ErrorKind::conflict, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

}  // namespace memcost
