#pragma once

#include <stdexcept>
#include <string>

namespace aqc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad flag value, empty input, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Inputs are individually valid but structurally inconsistent with each
// other (dimension mismatch, out-of-range code, layout mismatch).
struct StructuralError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
    using Error::Error;
};

// Optimization diverged; the message carries the epoch or step index.
struct TrainingError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Byte-level decode failure. The kind pins down which part of the format
// contract was broken.
struct ParseError : Error {
    enum class Kind {
        BadMagic,
        BadVersion,
        BadHeader,
        Truncated,
        TrailingData,
        Corrupt,
    };

    Kind kind;

    ParseError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

}  // namespace aqc
