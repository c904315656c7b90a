#pragma once

#include <stdexcept>
#include <string>

namespace ulab {

enum class ErrorKind {
  Validation,  // bad inputs, shapes, config, file contents, state misuse
  Numeric,     // non-finite values, aborted training
  Io,          // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& msg) {
  throw Error(ErrorKind::Validation, msg);
}

[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::Numeric, msg);
}

[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::Io, msg);
}

}  // namespace ulab
