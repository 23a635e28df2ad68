#pragma once

#include <stdexcept>
#include <string>

namespace granular {

/// Malformed configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure during a run: non-finite state, a proximal solve that
/// did not converge, an unsupported step size.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace granular
