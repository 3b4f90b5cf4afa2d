#pragma once

#include <stdexcept>
#include <string>

namespace hatcn {

// Error taxonomy, mapped to CLI exit codes in tools/hatcn_main.cpp:
// UsageError/ConfigError -> 1, DataError -> 2, TrainError -> 3.

// Invalid call: bad arguments, bad flag combinations, misuse of an API.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

// Inconsistent configuration: shape mismatches, invalid hyperparameters.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Bad or degenerate input data (unreadable files, constant series, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged or could not proceed (NaN loss, single-class input).
struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hatcn
