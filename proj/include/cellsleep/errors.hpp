#pragma once

#include <stdexcept>
#include <string>

namespace cellsleep {

// Input outside the mathematical domain of an operation (loads outside [0,1],
// x outside the search region, mismatched vector lengths).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Invalid or inconsistent scenario / sector configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Every grid node assigns zero likelihood to the observed batch.
class DegenerateEvidence : public std::runtime_error {
 public:
  explicit DegenerateEvidence(const std::string& what) : std::runtime_error(what) {}
};

// No window placement satisfies the duration constraint.
class ConstraintError : public std::runtime_error {
 public:
  explicit ConstraintError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cellsleep
