#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace posterlab {

// Error taxonomy shared across the library. The CLI maps ErrorKind to exit
// codes (validation -> 2, everything else -> 3).
enum class ErrorKind {
    InvalidInput,
    Parse,
    Validation,
    GenerationFailure,
    LayoutTooSmall,
    InvalidLayout,
    NoAlternative,
    NoDistinctLayout,
    CannotPerturb,
    PolicyViolation,
    DataIntegrity,
    UndefinedMetric,
    Numeric,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

const char* error_kind_name(ErrorKind kind);

}  // namespace posterlab
