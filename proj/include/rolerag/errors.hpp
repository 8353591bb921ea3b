#pragma once

#include <stdexcept>
#include <string>

namespace rolerag {

struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotFound : std::runtime_error {
    explicit NotFound(const std::string& msg) : std::runtime_error(msg) {}
};

struct Conflict : std::runtime_error {
    explicit Conflict(const std::string& msg) : std::runtime_error(msg) {}
};

// Transport failure after all retries were exhausted.
struct TransportError : std::runtime_error {
    TransportError(const std::string& msg, int attempts_)
        : std::runtime_error(msg), attempts(attempts_) {}
    int attempts = 0;
};

}  // namespace rolerag
