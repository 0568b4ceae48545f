#pragma once

#include <stdexcept>
#include <string>

namespace nlhomog {

// Base of every error raised by the library. Callers that only care about
// "something failed" catch this one.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Kernel truncation leaves more second-moment mass than allowed.
class TruncationError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class MemoryCapError : public Error {
public:
    using Error::Error;
};

// Quadratic-form identities (PSD, polarization) violated beyond tolerance.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class DisconnectedError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& key, int line, const std::string& what)
        : Error(format(key, line, what)), key_(key), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string msg = "config";
        if (line > 0) msg += ":" + std::to_string(line);
        if (!key.empty()) msg += ": key '" + key + "'";
        return msg + ": " + what;
    }

    std::string key_;
    int line_;
};

}  // namespace nlhomog
