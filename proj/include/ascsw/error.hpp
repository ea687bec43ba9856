#pragma once

#include <stdexcept>
#include <string>

namespace ascsw {

// Process exit codes used by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 1,
  kIo = 2,
  kCheckFailed = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Bad arguments, shape mismatches, malformed configuration.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ExitCode::kValidation, what) {}
};

// Zero-sized input where an image is required.
class EmptyInputError : public ValidationError {
 public:
  explicit EmptyInputError(const std::string& what) : ValidationError(what) {}
};

// Frame dimensions changed in the middle of a sequence.
class SequenceError : public ValidationError {
 public:
  explicit SequenceError(const std::string& what) : ValidationError(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::kIo, what) {}
};

}  // namespace ascsw
