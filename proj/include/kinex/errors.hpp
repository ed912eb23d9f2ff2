#pragma once

#include <stdexcept>
#include <string>

namespace kinex {

// Caller broke an interface contract (mismatched grids, wrong lengths).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Input that cannot be processed, e.g. an all-zero density.
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation not defined for the requested exchange model.
class UnsupportedModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iteration failed to converge or produced a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace kinex
