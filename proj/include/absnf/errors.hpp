#pragma once

#include <stdexcept>
#include <string>

namespace absnf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Syntax or range error while parsing an expression or a problem file.
/// `position` is a 1-based character offset inside the parsed text; for
/// problem files `line` carries the 1-based line number (0 if unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int position, int line = 0)
      : Error(message), position(position), line(line) {}
  int position;
  int line;
};

/// Arithmetic left the domain of a primitive (log/sqrt of a negative
/// argument, division by zero). Aborts the enclosing operation instead of
/// propagating NaN into rank decisions.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message) : Error(message) {}
};

/// A queried point violates the inequality or equality constraints beyond
/// the activity tolerance.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& message) : Error(message) {}
};

/// A jet point does not belong to the stratified set.
class NotInStratifiedSetError : public Error {
 public:
  explicit NotInStratifiedSetError(const std::string& message) : Error(message) {}
};

/// A finite-difference oracle was asked for at a point where it is not
/// applicable (stencil touches a kink).
class OracleError : public Error {
 public:
  explicit OracleError(const std::string& message) : Error(message) {}
};

/// Signature pair handed to the refinement check is not limit-compatible.
class IncompatibleSignatureError : public Error {
 public:
  explicit IncompatibleSignatureError(const std::string& message) : Error(message) {}
};

/// A problem definition failed validation (dimension or triangularity).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(message) {}
};

}  // namespace absnf
