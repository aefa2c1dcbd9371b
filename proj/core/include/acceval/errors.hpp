#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace acceval {

/// Optimizer or quadrature failed (no bracket, non-convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The plant produced a non-finite state; almost always a bad configuration.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cross-Entropy iterations observed no events for too long.
class NoEventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration parse or validation failure. `key_path()` names the offending
/// entry, e.g. "plant.tau_av".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : std::runtime_error(key_path.empty() ? what : key_path + ": " + what),
        key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace acceval
