#pragma once

#include <stdexcept>
#include <string>

namespace geoproto {

// Bad input: configuration, schema, CSV content, or a violated precondition
// that the caller can fix. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failure during computation on otherwise valid input (exit code 2).
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace geoproto
