#include "sgh/error.h"

namespace sgh {

const char *to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidCamera: return "InvalidCamera";
    case ErrorCode::InvalidFocal: return "InvalidFocal";
    case ErrorCode::RayParallelToPlane: return "RayParallelToPlane";
    case ErrorCode::DegenerateHomography: return "DegenerateHomography";
    case ErrorCode::MissingTable: return "MissingTable";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::DegreeMismatch: return "DegreeMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotEnoughMatches: return "NotEnoughMatches";
    case ErrorCode::NoSolvablePattern: return "NoSolvablePattern";
    case ErrorCode::NoModelFound: return "NoModelFound";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SceneGenerationFailed: return "SceneGenerationFailed";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    }
    return "Unknown";
}

const char *to_string(Status status) {
    switch (status) {
    case Status::Ok: return "Ok";
    case Status::Degenerate: return "Degenerate";
    case Status::RankDeficient: return "RankDeficient";
    case Status::NoRealRoots: return "NoRealRoots";
    case Status::AllFiltered: return "AllFiltered";
    case Status::Unsolvable: return "Unsolvable";
    case Status::InconsistentScale: return "InconsistentScale";
    case Status::NegativeFocal: return "NegativeFocal";
    case Status::ScaleDenominatorZero: return "ScaleDenominatorZero";
    case Status::DegenerateHomography: return "DegenerateHomography";
    }
    return "Unknown";
}

}  // namespace sgh
