#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optstop {

/// The observation has zero probability under both hidden states.
class ZeroLikelihoodError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A per-state PMF could not be fitted because the state has no records.
class EmptyStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid experiment configuration; `field()` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace optstop
