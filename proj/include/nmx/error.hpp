#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmx {

// Base of every failure raised by the library. Domain errors map to exit
// code 1 in the CLI and to 4xx/5xx statuses in the service.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

// Cycles and other graph-shape failures.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Table or state-space size beyond a configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Evidence with probability zero.
class InconsistentEvidenceError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Document is well-formed JSON but a field has the wrong shape.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

class EmptyViewError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

}  // namespace nmx
