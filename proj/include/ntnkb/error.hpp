#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ntnkb {

// Base of every recoverable failure raised by the library. The CLI maps
// these to exit code 1; UsageError maps to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VocabularyError : public Error {
public:
    explicit VocabularyError(const std::string& token)
        : Error("unknown vocabulary token '" + token + "'"), token_(token) {}

    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Shape mismatches between parameters and inputs are programming errors.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace ntnkb
