#pragma once

#include <stdexcept>
#include <string>

namespace detcal {

// Error taxonomy. The CLI maps these onto stable exit codes:
// UsageError -> 1, DataError / DomainError -> 2, DegenerateFitError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invariant-violating input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A fit whose optimum does not exist (e.g. all residuals zero).
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

}  // namespace detcal
