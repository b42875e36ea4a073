#pragma once

#include <stdexcept>
#include <string>

namespace lane {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Buffer or layer dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid construction parameter, range, or configuration value.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed schedule: arity mismatch, stream set not covered by task arguments.
struct ScheduleError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed data file; message carries the line number.
struct ParseError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

} // namespace lane
