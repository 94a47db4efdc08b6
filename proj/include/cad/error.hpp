#pragma once

#include <stdexcept>
#include <string>

namespace cad {

// Root of every error the library throws. Callers that only care about
// "something went wrong in cad" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed caller input: unknown token id, length mismatch, bad rows.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Out-of-domain numeric parameter (tau <= 0, top_p outside (0, 1], ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

// The backend could not be reached or the connection dropped.
class TransportError : public Error {
public:
    using Error::Error;
};

// The backend answered but reported a failure of its own.
class ModelError : public Error {
public:
    using Error::Error;
};

// Backend or registry lacks a requested feature (no /v1/config, no scorer, ...).
class UnsupportedCapability : public Error {
public:
    using Error::Error;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

class InputTooLong : public Error {
public:
    InputTooLong(std::string stream, std::size_t length, std::size_t limit)
        : Error("input too long for stream '" + stream + "': " + std::to_string(length) +
                " tokens > limit " + std::to_string(limit)),
          stream_(std::move(stream)), length_(length), limit_(limit) {}

    const std::string& stream() const noexcept { return stream_; }
    std::size_t length() const noexcept { return length_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::string stream_;
    std::size_t length_;
    std::size_t limit_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cad
