#pragma once

#include <stdexcept>
#include <string>

namespace fragkit {

enum class ErrorKind {
  Input,          // data violates an operation's precondition
  Parameter,      // caller-supplied setting out of range
  Format,         // malformed artifact file
  Compatibility,  // artifact pairing mismatch (e.g. model vs dataset)
  Numeric,        // solver failed to converge or produced non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error input_error(const std::string& what) { return {ErrorKind::Input, what}; }
inline Error parameter_error(const std::string& what) { return {ErrorKind::Parameter, what}; }
inline Error format_error(const std::string& what) { return {ErrorKind::Format, what}; }
inline Error compatibility_error(const std::string& what) { return {ErrorKind::Compatibility, what}; }
inline Error numeric_error(const std::string& what) { return {ErrorKind::Numeric, what}; }

/// Process exit code for an error kind: 1 usage, 2 format, 3 compatibility, 4 numeric.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return 2;
    case ErrorKind::Compatibility: return 3;
    case ErrorKind::Numeric: return 4;
    case ErrorKind::Input:
    case ErrorKind::Parameter: break;
  }
  return 1;
}

}  // namespace fragkit
