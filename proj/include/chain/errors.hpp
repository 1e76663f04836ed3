#pragma once

#include <stdexcept>
#include <string>

namespace chain {

/// Invalid configuration or precondition violated by caller-supplied sizes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or dataset.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss, parameter or hyperparameter became non-finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chain
