#pragma once

#include <stdexcept>
#include <string>

namespace steerbench {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or missing configuration (unknown backend kind, missing endpoint, ...).
struct ConfigError : Error {
    using Error::Error;
};

// The endpoint cannot do what scoring needs (e.g. no logprob support).
struct CapabilityError : Error {
    using Error::Error;
};

// Transport failure after exhausting retries.
struct TransportError : Error {
    TransportError(const std::string& what, int attempts_arg)
        : Error(what), attempts(attempts_arg) {}
    int attempts = 0;
};

// Replay-mode lookup of a key that was never cached.
struct CacheMissError : Error {
    CacheMissError(const std::string& what, std::string key_arg)
        : Error(what), key(std::move(key_arg)) {}
    std::string key;
};

// Input data violates a precondition (bad record, deficient split, ...).
struct DataError : Error {
    using Error::Error;
};

} // namespace steerbench
