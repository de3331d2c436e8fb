#pragma once
#include <stdexcept>
#include <string>

namespace ads {

// Config problems exit the CLI with code 2, invariant violations with code 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct InvariantError : std::runtime_error {
  explicit InvariantError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace ads
