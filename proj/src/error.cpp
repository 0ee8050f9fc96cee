#include "hybridlab/error.hpp"

namespace hybridlab {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::ReducibleChain: return "reducible-chain";
        case ErrorCode::InconsistentRhs: return "inconsistent-rhs";
        case ErrorCode::MajorantViolation: return "majorant-violation";
        case ErrorCode::ConfigMissingFile: return "config-missing-file";
        case ErrorCode::ConfigParse: return "config-parse";
        case ErrorCode::ConfigValidation: return "config-validation";
        case ErrorCode::Io: return "io";
        case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace hybridlab
