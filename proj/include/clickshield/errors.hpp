#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clickshield {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Conflict,
  Capacity,
  Io,
  Divergence,
  Internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Malformed input text. `line` is 1-based when the source is line-oriented,
/// 0 when there is no meaningful line number.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& message, std::size_t line = 0)
      : Error(ErrorCode::Parse, line == 0 ? message
                                          : "line " + std::to_string(line) +
                                                ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class ConflictError : public Error {
public:
  explicit ConflictError(const std::string& message)
      : Error(ErrorCode::Conflict, message) {}
};

class CapacityError : public Error {
public:
  explicit CapacityError(const std::string& message)
      : Error(ErrorCode::Capacity, message) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& message)
      : Error(ErrorCode::Io, message) {}
};

}  // namespace clickshield
