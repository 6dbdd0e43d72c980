#pragma once

#include <stdexcept>
#include <string>

namespace ae2 {

// Error taxonomy shared by the library, the C API and the CLI exit codes.
enum class ErrorKind {
  Config,      // bad configuration / unknown key / invalid combination
  Data,        // malformed file, missing data, bad manifest
  Dimension,   // shape mismatch between operands
  Degenerate,  // input violates a numeric precondition (zero row, empty list)
  Numeric,     // non-finite value encountered
  Eval,        // evaluation precondition violated (missing class, small gallery)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

// CLI contract: 0 success, 2 config error, 3 data/format error, 4 numeric.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Numeric:
      return 4;
    default:
      return 3;
  }
}

}  // namespace ae2
