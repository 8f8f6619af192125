#pragma once

#include <stdexcept>
#include <string>

namespace h2rat {

// Root of every error the library throws. The CLI maps the subclasses onto
// its exit codes, so new failure kinds should derive from the closest match.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or precondition that is not a shape problem.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Misuse of a gradient tape (foreign handle, double backward, ...).
class TapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. Subclasses identify the specific defect.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

// A checkpoint whose tensors disagree with its declared model dimensions.
class ShapeError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

// The correction table has no entry for a (class, zone) pair.
class NoCorrectionKnown : public Error {
 public:
  NoCorrectionKnown(int cls, int zone)
      : Error("no correction known for class " + std::to_string(cls) + ", zone " +
              std::to_string(zone)),
        class_id(cls),
        zone_id(zone) {}

  int class_id;
  int zone_id;
};

}  // namespace h2rat
