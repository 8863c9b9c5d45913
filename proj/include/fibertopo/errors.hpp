#pragma once

#include <stdexcept>

namespace fibertopo {

/// Invalid user configuration; the message starts with the offending key.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace fibertopo
