#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A text input could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Required columns are missing from a log header.
class SchemaError : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// A log contains no malicious attempt, so there is no epidemic to reconstruct.
class EmptyEpidemic : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// An iterative method did not converge within its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A sampler ran out of its draw budget. `epsilon()` is the tolerance it was stuck at.
class BudgetExhausted : public Error {
public:
    BudgetExhausted(const std::string& what, double epsilon) : Error(what), epsilon_(epsilon) {}
    double epsilon() const noexcept { return epsilon_; }

private:
    double epsilon_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace spm
