#pragma once

#include <stdexcept>
#include <string>

namespace cohwork {

// Invalid experiment configuration (schema violation, unknown key, bad value).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds a hard capacity guard (e.g. exact convolution chain length).
class CapacityError : public std::runtime_error {
  public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failure while reading or writing results.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cohwork
