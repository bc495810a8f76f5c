#pragma once

#include <stdexcept>
#include <string>

namespace plr {

// Library error taxonomy. The CLI front end maps ParseError / DimensionError /
// PreconditionError to exit code 2 (bad input) and everything else to 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Sample/cluster/row index out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

// Shape mismatch between two objects that must agree (N, M, dim).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Operation called on an object in a state that cannot support it.
class StateError : public Error {
public:
    using Error::Error;
};

// Input value violates a documented precondition (negative alpha, empty
// partition, non-simplex weights, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Malformed serialized input: bad header, bad token, unknown config key.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace plr
