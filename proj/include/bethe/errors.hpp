#pragma once

#include <stdexcept>
#include <string>

namespace bethe {

// fatal numerical problem (non-finite value, failed cross-check); CLI exit 3
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// invalid experiment configuration; CLI exit 2
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bethe
