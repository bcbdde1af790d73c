#pragma once

#include <stdexcept>
#include <string>

namespace spinlab {

// Bad caller input: mismatched dimensions, invalid parameters, malformed data.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Request exceeds a configured enumeration or kernel size cap.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input lies outside the mathematical domain of a formula (e.g. 2L·j >= 1).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

} // namespace spinlab
