#pragma once

#include <stdexcept>
#include <string>

namespace gwlab {

struct ParameterOutOfRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotCritical : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct TruncationOverflow : std::length_error {
    using std::length_error::length_error;
};

struct InversionUnstable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureNonConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigInvalid : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace gwlab
