#pragma once

#include <stdexcept>
#include <string>

namespace positq {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid format parameters (n, es, f out of range).
class FormatError : public Error {
public:
    using Error::Error;
};

// Input outside an operation's mathematical domain (non-finite values, zero divisors).
class DomainError : public Error {
public:
    using Error::Error;
};

// Attempt to decode the posit not-a-real pattern.
class NotARealError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent data (datasets, tensors with bad elements).
class DataError : public Error {
public:
    using Error::Error;
};

// Manifest or blob problems. The message starts with the offending field path.
class LoadError : public Error {
public:
    using Error::Error;
};

// Invalid command-line or sweep configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace positq
