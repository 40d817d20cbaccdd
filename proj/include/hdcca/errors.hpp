#pragma once

#include <stdexcept>
#include <string>

namespace hdcca {

// Arguments outside the region where a formula is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Matrix shapes or dimension counts that do not fit together.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A factorisation produced values that cannot come from valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// X or Y does not have full row rank, so S_xx or S_yy is singular.
class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Malformed input files, study configurations or presets.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hdcca
