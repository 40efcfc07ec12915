#pragma once

#include <stdexcept>
#include <string>

namespace guardsim {

/// Broad failure classes. The CLI maps each one to a fixed exit code.
enum class ErrorKind { validation = 1, io = 2, service = 3 };

/// Base error carrying the originating module so messages read
/// "<module>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& detail)
      : std::runtime_error(module + ": " + detail), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  std::string module_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string module, const std::string& detail)
      : Error(ErrorKind::validation, std::move(module), detail) {}
};

class IoError : public Error {
 public:
  IoError(std::string module, const std::string& detail)
      : Error(ErrorKind::io, std::move(module), detail) {}
};

class ServiceError : public Error {
 public:
  ServiceError(std::string module, const std::string& detail)
      : Error(ErrorKind::service, std::move(module), detail) {}
};

}  // namespace guardsim
