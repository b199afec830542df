#pragma once

#include <stdexcept>
#include <string>

namespace nete {

// Base of every error raised by the library. Callers that only need a message
// catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input file.
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Remote endpoint could not be reached. Retryable.
class TransportError : public Error {
public:
    TransportError(const std::string& endpoint, int attempts, const std::string& detail)
        : Error("transport failure talking to " + endpoint + " after " + std::to_string(attempts) +
                " attempt(s): " + detail),
          endpoint_(endpoint), attempts_(attempts) {}

    const std::string& endpoint() const noexcept { return endpoint_; }
    int attempts() const noexcept { return attempts_; }

private:
    std::string endpoint_;
    int attempts_;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

// Server answered with a status other than 200.
class HttpStatusError : public Error {
public:
    HttpStatusError(const std::string& endpoint, int status, const std::string& excerpt)
        : Error("HTTP " + std::to_string(status) + " from " + endpoint + ": " + excerpt),
          status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

// Server answered 200 but the payload violates the wire schema.
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace nete
