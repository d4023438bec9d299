#pragma once

#include <stdexcept>
#include <string>

namespace pufforge {

// An all-zeros or all-ones LFSR seed; callers are expected to pre-filter.
class StuckSeed : public std::runtime_error {
public:
    explicit StuckSeed(const std::string& what) : std::runtime_error(what) {}
};

// Authenticated decryption failed (wrong key or tampered frame).
class IntegrityFailure : public std::runtime_error {
public:
    explicit IntegrityFailure(const std::string& what) : std::runtime_error(what) {}
};

// A wire frame or file payload does not match its declared layout.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Protocol: a database round index was requested twice in the same direction.
class RoundExhausted : public std::runtime_error {
public:
    explicit RoundExhausted(const std::string& what) : std::runtime_error(what) {}
};

// Protocol: authentication request for an identity absent from the database.
class UnknownId : public std::runtime_error {
public:
    explicit UnknownId(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pufforge
