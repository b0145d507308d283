#pragma once

#include <stdexcept>
#include <string>

namespace forgerecon {

// Invalid configuration or incompatible shapes between a module and its input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shape disagreement between operands of an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation received an empty input (zero spatial size, zero nodes).
class EmptyInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Zero-norm vector passed to a cosine distance.
class DegenerateVectorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A metric that is undefined for the given labels (e.g. single class AUC).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace forgerecon
