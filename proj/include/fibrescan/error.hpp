#pragma once

#include <stdexcept>
#include <string>

namespace fibrescan {

/// Failure categories. The CLI maps them onto its exit codes.
enum class ErrorKind { Config = 1, Io = 2, Numerical = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Invalid parameters or a violated precondition.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// A computation that is undefined for the given data (empty window, zero variance, ...).
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

}  // namespace fibrescan
