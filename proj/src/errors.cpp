#include "regscope/errors.hpp"

namespace regscope {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedName: return "MalformedName";
    case ErrorCode::NoPublicSuffix: return "NoPublicSuffix";
    case ErrorCode::Io: return "Io";
    case ErrorCode::IpLiteralHost: return "IpLiteralHost";
    case ErrorCode::NetworkTimeout: return "NetworkTimeout";
    case ErrorCode::NotFoundInStore: return "NotFoundInStore";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::ResolverUnreachable: return "ResolverUnreachable";
    case ErrorCode::InconsistentInput: return "InconsistentInput";
    case ErrorCode::NoProbes: return "NoProbes";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::OverlappingSnapshots: return "OverlappingSnapshots";
    case ErrorCode::MissingCoverage: return "MissingCoverage";
    case ErrorCode::JoinFailure: return "JoinFailure";
    case ErrorCode::DuplicateDomain: return "DuplicateDomain";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::MismatchedModels: return "MismatchedModels";
    case ErrorCode::AllZeroVariances: return "AllZeroVariances";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace regscope
