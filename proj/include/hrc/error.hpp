#pragma once

#include <stdexcept>
#include <string>

namespace hrc {

// Base of every error raised by the library. Callers that only need a message
// can catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or frame. line is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A velocity profile whose speed never rises above the completion threshold.
class DegenerateProfileError : public Error {
public:
    using Error::Error;
};

// Damped normal equations could not be solved.
class SingularSystemError : public Error {
public:
    SingularSystemError(const std::string& what, int parameter)
        : Error(what + " (parameter " + std::to_string(parameter) + ")"), parameter_(parameter) {}
    int parameter() const noexcept { return parameter_; }

private:
    int parameter_;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// Too many degenerate samples to summarize a completion-time distribution.
class InvalidBeliefError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace hrc
