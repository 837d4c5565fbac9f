#pragma once

#include <stdexcept>
#include <string>

namespace hetcorr {

/// Base for every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Location or date labels of two matrices do not line up.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied argument is outside its admissible range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of a transform (negative counts, zero weights).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a well-defined answer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Remote data could not be retrieved.
class FetchError : public Error {
 public:
  using Error::Error;
};

}  // namespace hetcorr
