#pragma once

#include <stdexcept>
#include <string>

namespace hybridlab {

// Numeric values are mirrored by hl_status in hybridlab.h.
enum class ErrorCode {
    InvalidArgument = 1,
    ReducibleChain = 2,
    InconsistentRhs = 3,
    MajorantViolation = 4,
    ConfigMissingFile = 5,
    ConfigParse = 6,
    ConfigValidation = 7,
    Io = 8,
    Internal = 9,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) raise(ErrorCode::InvalidArgument, message);
}

}  // namespace hybridlab
