#pragma once

#include <stdexcept>
#include <string>

namespace reldiag {

// Invalid inputs or violated preconditions (empty sets, out-of-range
// parameters, mismatched vocabularies). CLI maps these to exit code 2.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / stream failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Prompt template rendering failures (unbound or unknown placeholder).
class TemplateError : public std::runtime_error {
 public:
  explicit TemplateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Duplicate keys or other consistency violations inside a label set.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace reldiag
