#ifndef MFRAME_ERROR_HPP
#define MFRAME_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mframe {

// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed expression or problem-file text. `offset` is a byte offset into
// the offending input when known, -1 otherwise.
struct ParseError : Error {
    ParseError(const std::string& msg, long offset_ = -1)
        : Error(offset_ >= 0 ? msg + " (at byte " + std::to_string(offset_) + ")" : msg),
          offset(offset_) {}
    long offset;
};

// Identifier not registered in the variable table.
struct UnknownIdentifierError : Error {
    UnknownIdentifierError(const std::string& token_, long offset_ = -1)
        : Error(offset_ >= 0
                    ? "unknown identifier '" + token_ + "' (at byte " + std::to_string(offset_) + ")"
                    : "unknown identifier '" + token_ + "'"),
          token(token_), offset(offset_) {}
    std::string token;
    long offset;
};

// Numeric evaluation hit an invalid region (sqrt of a negative, division near
// zero, log of a nonpositive value). `where` is the printed offending
// subexpression when available.
struct DomainError : Error {
    DomainError(const std::string& msg, std::string where_ = {})
        : Error(where_.empty() ? msg : msg + " in " + where_), where(std::move(where_)) {}
    std::string where;
};

struct EvalError : Error {
    using Error::Error;
};

// probably_equal could not find enough valid sample points.
struct SamplingExhaustedError : Error {
    using Error::Error;
};

// Rational arithmetic left the supported 64-bit range.
struct OverflowError : Error {
    using Error::Error;
};

struct SolverError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

}  // namespace mframe

#endif
