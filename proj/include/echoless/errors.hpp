#pragma once

#include <stdexcept>
#include <string>

namespace echoless {

/// Precondition violated by the caller.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unsupported file content.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Blind RT60 estimation found no usable subband.
class EstimationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Envelope without a strict maximum.
class NoPeak : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Band carries no energy over the requested range.
class EmptyBand : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric has no data to work on (e.g. no silent subbands for RR).
class MetricUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace echoless
