#pragma once

#include <stdexcept>
#include <string>

namespace evcharge {

// Invalid configuration or arguments supplied by the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be processed (unreadable file, inconsistent records).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evcharge
