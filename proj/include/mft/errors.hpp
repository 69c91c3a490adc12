#pragma once

#include <stdexcept>
#include <string>

namespace mft {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input problems. The CLI maps these to exit status 2.

class ParseError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class AssumptionError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Numerical failures. The CLI maps these to exit status 1.

class SynthesisError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public Error {
 public:
  using Error::Error;
};

inline bool is_input_error(const Error& e) {
  return dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
         dynamic_cast<const AssumptionError*>(&e) || dynamic_cast<const UsageError*>(&e);
}

}  // namespace mft
