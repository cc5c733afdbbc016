#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace mespp {

// Invalid input or state (bad schema content, violated invariant, bad
// argument). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure (missing file, unwritable path). Exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an agent's current vertex is infeasible under its own danger
// constraints; the team planner catches it and issues a stay-in-place plan.
class StrandedAgentError : public ValidationError {
public:
    explicit StrandedAgentError(const std::string& what) : ValidationError(what) {}
};

namespace detail {

// Shortest decimal form that round-trips, for stable text output.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

}  // namespace detail

}  // namespace mespp
