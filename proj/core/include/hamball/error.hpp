#pragma once

#include <stdexcept>
#include <string>

namespace hamball {

// Caller passed arguments that violate an operation's preconditions.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// File could not be opened, read, written or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite value reached a loss or gradient.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hamball
