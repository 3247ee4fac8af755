#pragma once

#include <stdexcept>
#include <string>

namespace pointmine {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed text in a dataset or model file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid file whose contents disagree with the declared schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace pointmine
