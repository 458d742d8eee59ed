#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace priorlab {

// Common base so the CLI boundary can map any library failure to an exit
// code without enumerating every type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

class InvalidValue : public Error {
public:
    using Error::Error;
};

class InvalidIndex : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class SingularGenerator : public Error {
public:
    using Error::Error;
};

// Quadratic data-consistency coupling 1/(2*sigma_t^2) is undefined at
// sigma_t = 0.
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class NonFiniteObjective : public Error {
public:
    using Error::Error;
};

// Carries the step index at which the loss first became non-finite.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t step, const std::string& msg)
        : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace priorlab
