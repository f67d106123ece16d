#pragma once

#include <stdexcept>
#include <string>

namespace ftl {

// Bad input: a value that violates a type invariant or a precondition that the
// caller controls. CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// leg_i == leg_s: both beam splitters work independently.
class SingularGeometry : public ValidationError {
public:
    SingularGeometry()
        : ValidationError("singular geometry: leg_i equals leg_s, the beam splitters "
                          "work independently") {}
};

// leg_i > leg_s: information flows from the detector back to BS2.
class ReversedGeometry : public ValidationError {
public:
    ReversedGeometry()
        : ValidationError("reversed geometry: leg_i exceeds leg_s, information would be "
                          "transmitted from D to BS2") {}
};

class InvalidBoost : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// r/V does not fit inside the cycle.
class WindowError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// signal speed at or below c: there is no round trip into the past.
class NoParadox : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A well-formed computation with no defined answer (zero denominators, empty
// samples). CLI exit code 3.
class StatisticalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UndefinedRatio : public StatisticalError {
public:
    using StatisticalError::StatisticalError;
};

class UndefinedReliability : public StatisticalError {
public:
    using StatisticalError::StatisticalError;
};

class EstimationError : public StatisticalError {
public:
    using StatisticalError::StatisticalError;
};

// Filesystem and format problems. CLI exit code 4.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace ftl
