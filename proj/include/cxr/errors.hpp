#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cxr {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a domain constraint (range, registry, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Caller broke a precondition of an operation.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Lookup of an unknown session, pair or similar key.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Duplicate write of a key that may be written only once.
class ConflictError : public Error {
public:
    using Error::Error;
};

/// Generation or embedding backend failed.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool retryable)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// A report lacked its FINDINGS/IMPRESSION structure.
class ReportFormatError : public Error {
public:
    ReportFormatError(const std::string& what, std::string raw_text = {})
        : Error(what), raw_text_(std::move(raw_text)) {}
    const std::string& raw_text() const noexcept { return raw_text_; }

private:
    std::string raw_text_;
};

class MissingSectionError : public ReportFormatError {
public:
    MissingSectionError(std::string section, const std::string& what)
        : ReportFormatError(what), section_(std::move(section)) {}
    const std::string& section() const noexcept { return section_; }

private:
    std::string section_;
};

class SectionOrderError : public ReportFormatError {
public:
    using ReportFormatError::ReportFormatError;
};

}  // namespace cxr
