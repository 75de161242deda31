#pragma once

#include <stdexcept>
#include <string>

namespace taglab {

// Base class for every error raised by the library. The CLI maps each
// subclass onto its own process exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 1; }
};

// Bad arguments or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

// Malformed corpus, split or model files; version or kind mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

// Non-finite losses or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 5; }
};

}  // namespace taglab
