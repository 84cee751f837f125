#pragma once

#include <stdexcept>
#include <string>

namespace lrs {

// Malformed instance file or other on-disk data.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input is valid but outside what an algorithm can handle (e.g. an exact
// solver asked for an instance beyond both of its modes).
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration (missing credential, invalid parameter combination).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A model response that could not be turned into valid coefficients.
// Carries the offending raw text so callers can log it or retry.
struct ParseError : std::runtime_error {
    ParseError(const std::string& message, std::string raw)
        : std::runtime_error(message), raw_text(std::move(raw)) {}
    std::string raw_text;
};

// Retryable provider failures.
struct TransportError : std::runtime_error {
    enum class Kind { connect, http_status, timeout, empty_completion };
    TransportError(Kind k, const std::string& message)
        : std::runtime_error(message), kind(k) {}
    Kind kind;
};

// Raised when all guidance attempts are exhausted.
struct GuidanceUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Statistical test called with too little usable data.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lrs
