#pragma once

#include <stdexcept>
#include <string>

namespace nlvi {

/// Invalid parameters, inconsistent meshes, violated preconditions.
/// The CLI maps these to exit status 2.
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that started from valid input but failed: non-SPD
/// factorization, solver stagnation, quadrature that does not settle.
/// The CLI maps these to exit status 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ConfigurationError(message);
}

}  // namespace detail
}  // namespace nlvi
