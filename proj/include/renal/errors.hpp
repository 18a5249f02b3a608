#pragma once

#include <stdexcept>
#include <string>

namespace renal {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a domain invariant (label set, value range, geometry).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File is not a NIfTI-1 single-file volume.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Valid NIfTI-1 file using a feature outside the supported subset.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Payload or compressed stream ends early or is damaged.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters (fractions, thresholds, counts).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Too few samples to fit a ratio range.
class FitError : public Error {
public:
    using Error::Error;
};

/// Phantom parameters cannot be realised inside the volume.
class ConstructionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace renal
