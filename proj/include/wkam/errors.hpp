#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wkam {

// Bad arguments at a module boundary (grid mismatch, empty set, bad window...).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Expression text could not be parsed. Carries the byte offset of the failure
// and a short description of what was expected there.
struct ParseError : std::runtime_error {
    std::size_t position;
    std::string expected;
    ParseError(std::size_t pos, const std::string& what_expected)
        : std::runtime_error("parse error at byte " + std::to_string(pos) +
                             ": expected " + what_expected),
          position(pos),
          expected(what_expected) {}
};

// Model evaluation failed (non-finite value, division by zero, bad structure).
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A solver failed to reach its stopping criterion. Carries the tail of the
// residual history for diagnosis.
struct SolveError : std::runtime_error {
    std::vector<double> residual_history;
    SolveError(const std::string& msg, std::vector<double> history)
        : std::runtime_error(msg), residual_history(std::move(history)) {}
};

// A stated precondition of an operation is violated by the data.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wkam
