#ifndef RELSENS_ERRORS_HPP
#define RELSENS_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relsens {

// Base class for all errors raised by the library. The message is
// module-qualified, e.g. "mvn: correlation matrix is not PSD".
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- configuration / parsing ---

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, std::size_t offset)
      : Error(msg), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifierError : public Error {
 public:
  UnknownIdentifierError(const std::string& msg, std::string name)
      : Error(msg), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// --- evaluation ---

class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfSupportError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// --- numerics ---

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

class ZeroGradientError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class TooManyCutSetsError : public Error {
 public:
  using Error::Error;
};

class SubsetTooLargeError : public Error {
 public:
  using Error::Error;
};

class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

// Raised when a variance estimate is more negative than its noise band
// allows, i.e. the MVN budget is inconsistent with the requested quantity.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace relsens

#endif  // RELSENS_ERRORS_HPP
