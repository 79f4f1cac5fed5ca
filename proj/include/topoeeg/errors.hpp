#pragma once

#include <stdexcept>
#include <string>

namespace topoeeg {

// Error taxonomy shared by the library and the CLI. Each category maps to a
// CLI exit code (see tools/topoeeg.cpp).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or precondition violation (cutoffs, window sizes, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but carries no information (constant series).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Combinatorial blow-up guard tripped.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Missing or mismatched schema cells, corrupt files, unreadable data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or flag problems.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant (e.g. a filtration that is not face-ordered).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace topoeeg
