#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hesplit {

// Base of every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shapes that do not line up. `axis` names the offending dimension.
class DimensionError : public Error {
public:
    DimensionError(std::string what, std::string axis)
        : Error(what + " (axis: " + axis + ")"), axis_(std::move(axis)) {}
    const std::string& axis() const noexcept { return axis_; }

private:
    std::string axis_;
};

class InvalidStateError : public Error {
public:
    using Error::Error;
};

class ValueError : public Error {
public:
    using Error::Error;
};

// Loss or parameters became non-finite during training.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// HE parameter set rejected at keygen.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Scaled values do not fit the modulus at encode time.
class PrecisionError : public Error {
public:
    using Error::Error;
};

// Operand levels differ, or the modulus chain is exhausted.
class LevelError : public Error {
public:
    using Error::Error;
};

class MissingKeyError : public Error {
public:
    using Error::Error;
};

// Malformed bytes, unknown message tags, or state-machine violations.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class IncompleteFrameError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

class HandshakeError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

// The byte stream broke. `bytes_moved` reports how far the exchange got.
class TransportError : public Error {
public:
    TransportError(const std::string& what, std::size_t bytes_moved = 0)
        : Error(what + " after " + std::to_string(bytes_moved) + " bytes"),
          bytes_moved_(bytes_moved) {}
    std::size_t bytes_moved() const noexcept { return bytes_moved_; }

private:
    std::size_t bytes_moved_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row)
        : Error(what + " at row " + std::to_string(row)), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace hesplit
