#pragma once

#include <stdexcept>
#include <string>

namespace vortexdiv {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad parameter or mismatched shapes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but mathematically unusable (all-zero pupil, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Global-phase alignment of two fields with zero overlap.
class AlignmentUndefined : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, bad header, bad values).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File shorter than its header promises.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Missing/unreadable inputs, I/O failures.
class InputError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace detail
}  // namespace vortexdiv
