#pragma once

#include <stdexcept>
#include <string>

namespace hetero {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent schema / configuration.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Total kernel weight at a query point is zero. Callers may retry with a
// larger bandwidth.
class NoLocalData : public Error {
 public:
  using Error::Error;
};

}  // namespace hetero
