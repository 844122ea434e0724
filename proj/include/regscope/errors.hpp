#pragma once

#include <stdexcept>
#include <string>

namespace regscope {

enum class ErrorCode {
    MalformedName,
    NoPublicSuffix,
    Io,
    IpLiteralHost,
    NetworkTimeout,
    NotFoundInStore,
    RateLimited,
    MalformedDocument,
    ResolverUnreachable,
    InconsistentInput,
    NoProbes,
    EmptyGroup,
    SchemaViolation,
    OverlappingSnapshots,
    MissingCoverage,
    JoinFailure,
    DuplicateDomain,
    NegativeCount,
    EmptyReport,
    InsufficientPool,
    RankDeficient,
    MismatchedModels,
    AllZeroVariances,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a stable error code plus a human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace regscope
