#pragma once

#include <stdexcept>
#include <string>

namespace duallink {

// Exception families map one-to-one onto CLI exit statuses:
// ConfigError -> 1, NumericalError/DomainError/DataIntegrityError -> 2,
// VerificationError -> 3.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace duallink
