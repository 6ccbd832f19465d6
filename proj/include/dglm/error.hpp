#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dglm {

/// Line search could not satisfy the sufficient-decrease test, or another
/// numerical invariant was violated mid-solve.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A collective could not complete (peer disconnected, short read, length mismatch).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ranks entered collectives in different orders or with different shapes.
class ProtocolError : public TransportError {
public:
    using TransportError::TransportError;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shard/label/weights file is missing, unreadable or fails validation.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The dense reference solver exhausted its budget before reaching tolerance.
class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dglm
