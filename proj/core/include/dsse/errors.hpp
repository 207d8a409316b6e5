#pragma once

#include <stdexcept>
#include <string>

namespace dsse {

// Base of every error the engine throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public Error
{
public:
    using Error::Error;
};

class DomainError : public Error
{
public:
    using Error::Error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class NotFound : public Error
{
public:
    using Error::Error;
};

/// Protocol-level failure: malformed request, counter desync, column collision.
class ProtocolError : public Error
{
public:
    using Error::Error;
};

/// Ciphertext failed its integrity check (wrong key or tampering).
class IntegrityError : public Error
{
public:
    using Error::Error;
};

class TransportError : public Error
{
public:
    TransportError(unsigned region, const std::string& what)
        : Error("region " + std::to_string(region) + ": " + what), region_(region)
    {
    }

    unsigned region() const noexcept { return region_; }

private:
    unsigned region_;
};

} // namespace dsse
