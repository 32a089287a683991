#pragma once

#include <stdexcept>
#include <string>

namespace cnndo {

/// Invalid or inconsistent run configuration. Carries the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : std::runtime_error(key_path.empty() ? what : key_path + ": " + what),
        key_path_(key_path) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

/// Numerical failure: stuck Markov chain, sign problem, optimizer step-size
/// underflow, zero density-matrix element where a ratio is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dense/enumerating routine was asked for a system larger than its guard.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cnndo
