#pragma once

#include <stdexcept>
#include <string>

namespace dfdrnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, matrices, ids).
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied configuration; the CLI maps this to a usage exit code.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dfdrnn
