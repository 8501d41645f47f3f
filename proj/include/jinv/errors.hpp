#pragma once

#include <stdexcept>
#include <string>

namespace jinv {

// Invalid configuration or hyperparameter set. The CLI maps this to exit 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Linear solver, time stepper or optimizer failure. The CLI maps this to exit 3.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jinv
