#pragma once

#include <stdexcept>
#include <string>

namespace fif {

/// Malformed expression or scenario text. Carries the byte offset of the
/// first offending character when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Violated precondition or invariant on user-supplied data. The message
/// names the offending field/path.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: non-finite evaluation, divergent fixed-point loop,
/// incompatible grid resolution.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fif
