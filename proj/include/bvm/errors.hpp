#pragma once

#include <stdexcept>
#include <string>

namespace bvm {

/// Malformed user data: empty samples, non-positive symbols, bad counts files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point outside the domain of an operation (zero cell where an interior
/// pmf is required, derivative of g_alpha at 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid numeric parameter or dimension mismatch.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The experiment is well-formed but degenerate (zero variance, delta = 1,
/// too few replications) and is refused rather than run.
class GuardRejection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem tied to one key (or file line).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace bvm
