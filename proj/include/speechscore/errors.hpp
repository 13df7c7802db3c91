#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace speechscore {

// Base of every error the library throws. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file or document (bad magic, truncated payload, bad token line).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    // 1-based line number for text formats, 0 when not applicable.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input whose values violate an invariant (NaN, duplicate id, ...).
class DataError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Importance weights summing to exactly zero.
class DegenerateWeightError : public Error {
public:
    using Error::Error;
};

// Too few points, or constant input, for a correlation.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// A scored utterance has no row in the manifest.
class JoinError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace speechscore
