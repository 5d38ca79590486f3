#pragma once

#include <stdexcept>
#include <string>

namespace ulsa {

/// Malformed arguments: bad shapes, out-of-range indices, invalid configs.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A non-finite value appeared during an iterative numeric procedure.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, int step = -1)
      : std::runtime_error(what), step_(step) {}

  /// Diffusion step (τ) at which the failure was detected, or -1.
  int step() const noexcept { return step_; }

 private:
  int step_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A trained model failed its quality gate.
class QualificationFailure : public std::runtime_error {
 public:
  QualificationFailure(const std::string& what, double measured)
      : std::runtime_error(what), measured_(measured) {}

  double measured() const noexcept { return measured_; }

 private:
  double measured_;
};

#define ULSA_REQUIRE(cond, msg)                 \
  do {                                          \
    if (!(cond)) throw ::ulsa::InvalidInput(msg); \
  } while (0)

}  // namespace ulsa
