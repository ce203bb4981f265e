#pragma once

#include <stdexcept>
#include <string>

namespace connsim {

/// Base of every error raised by the library. Callers that only need to
/// distinguish "domain failure" from "bug" can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Input data (matrix, fact document, config file) does not satisfy the
/// invariants of the type it is meant to construct.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A metric is not defined on the given graph (q < 2, zero degree variance).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

/// A requested target or selection cannot be met. Carries the best value that
/// was reached, when there is one.
class Infeasible : public Error {
public:
    explicit Infeasible(const std::string& what, double best_achieved = 0.0)
        : Error(what), best_achieved_(best_achieved) {}

    double best_achieved() const noexcept { return best_achieved_; }

private:
    double best_achieved_;
};

/// Exact solvers refuse graphs above their configured node ceiling.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced during a numeric computation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; `line()` is 1-based, 0 when not applicable.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace connsim
