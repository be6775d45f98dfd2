#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpefem {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDomain : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class NotImplemented : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Raised when a linear factorization breaks down.
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// Newton iteration did not reach its tolerance. Carries the residual history
/// so the caller can see how far it got.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& msg, std::vector<double> history, std::vector<double> last_iterate = {})
        : Error(msg), history_(std::move(history)), last_(std::move(last_iterate)) {}
    const std::vector<double>& residual_history() const { return history_; }
    /// Last Newton iterate in real-split form (may be empty).
    const std::vector<double>& last_iterate() const { return last_; }

private:
    std::vector<double> history_;
    std::vector<double> last_;
};

class VerificationFailure : public Error {
public:
    using Error::Error;
};

}  // namespace gpefem
