#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mgsagc {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Domain,
  Shape,
  Corrupt,
  Io,
  NonFinite,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure; `line()` is 1-based, 0 when the problem is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : Error(ErrorCode::Parse, line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

}  // namespace mgsagc
