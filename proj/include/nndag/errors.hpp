#pragma once

#include <stdexcept>
#include <string>

namespace nndag {

/// Invalid configuration value (graph spec, solver config, experiment spec).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or non-finite input data (files, matrices).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric is undefined for the given arguments (e.g. zero ground truth).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nndag
