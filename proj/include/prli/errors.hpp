#pragma once

#include <stdexcept>
#include <string>

namespace prli {

/// Raw exploration signal whose empirical covariance is (numerically) singular,
/// so no whitening transform exists.
class NotPersistentlyExcitingError : public std::runtime_error {
public:
    explicit NotPersistentlyExcitingError(const std::string& what)
        : std::runtime_error(what) {}
};

/// Experiment configuration that fails to parse or validate. The message
/// carries the offending field path.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace prli
