#pragma once

#include <stdexcept>
#include <string>

namespace pip {

// Error categories map to CLI exit codes: validation/domain -> 1, I/O and
// transport -> 2.
enum class ErrorKind {
  Parse,
  Validation,
  Capacity,
  Io,
  Transport,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(std::string message)
      : Error(ErrorKind::Parse, std::move(message)) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::string message)
      : Error(ErrorKind::Validation, std::move(message)) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(std::string message)
      : Error(ErrorKind::Capacity, std::move(message)) {}
};

class IoError : public Error {
 public:
  explicit IoError(std::string message)
      : Error(ErrorKind::Io, std::move(message)) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(std::string message)
      : Error(ErrorKind::Transport, std::move(message)) {}
};

}  // namespace pip
