#ifndef ACHAIN_ERRORS_HPP
#define ACHAIN_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace achain {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something malformed (sizes, ranges, non-Hermitian input).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// The kernel / step combination does not define a normalizable bath state.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class AsymmetricKernelTable : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EigenSolveError : public Error {
 public:
  using Error::Error;
};

// Interaction applied out of order or twice.
class StepOrderError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// The measured functional lies entirely in the already-pinned subspace, so
// its outcome is fixed. forced_values holds that outcome per branch.
class DegenerateMeasurement : public Error {
 public:
  DegenerateMeasurement(const std::string& what, std::vector<double> forced)
      : Error(what), forced_values(std::move(forced)) {}
  std::vector<double> forced_values;
};

class CoordinateAlreadyPinned : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Configuration file / CLI validation failure. field names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field(field) {}
  std::string field;
};

}  // namespace achain

#endif  // ACHAIN_ERRORS_HPP
