#pragma once

#include <stdexcept>
#include <string>

namespace mixlab {

// A stated hypothesis or operation precondition does not hold
// (CLI exit code 2).
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what)
        : std::runtime_error(what) {}
};

// A statistical tolerance gate failed (CLI exit code 3).
class ToleranceError : public std::runtime_error {
public:
    explicit ToleranceError(const std::string& what)
        : std::runtime_error(what) {}
};

// An internal consistency invariant was breached; indicates a bug
// (CLI exit code 4).
class InvariantError : public std::runtime_error {
public:
    explicit InvariantError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace mixlab
