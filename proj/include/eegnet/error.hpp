#pragma once

#include <stdexcept>
#include <string>

namespace eegnet {

// Base of every library failure. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or arguments (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared during a forward or training step.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed input files (trial CSVs, manifests, plans).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A checkpoint was written for a different model configuration.
class CheckpointMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace eegnet
