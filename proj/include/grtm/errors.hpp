#pragma once

#include <stdexcept>
#include <string>

namespace grtm {

// Caller broke a precondition (bad dimensions, empty input, invalid config).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical quantity left its valid domain during a computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; the message always carries a line or byte position.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace grtm
