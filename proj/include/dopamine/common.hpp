#pragma once

#include <stdexcept>
#include <string>

namespace dopamine {

inline constexpr const char* kVersion = "0.1.0";

// Thrown on malformed configuration (bad ranges, inconsistent options).
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on filesystem / parse failures. The CLI maps this to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Absolute tolerance used for value comparisons throughout unless a contract
// states a tighter one.
inline constexpr double kDefaultTol = 1e-9;

}  // namespace dopamine
