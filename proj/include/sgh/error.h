#pragma once

#include <stdexcept>
#include <string>

namespace sgh {

enum class ErrorCode {
    InvalidCamera,
    InvalidFocal,
    RayParallelToPlane,
    DegenerateHomography,
    MissingTable,
    CountMismatch,
    DegreeMismatch,
    ChecksumMismatch,
    ParseError,
    NotEnoughMatches,
    NoSolvablePattern,
    NoModelFound,
    InvalidConfig,
    SceneGenerationFailed,
    ValidationFailed,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

// Non-throwing outcome of the numerical kernels and solvers.
enum class Status {
    Ok,
    Degenerate,
    RankDeficient,
    NoRealRoots,
    AllFiltered,
    Unsolvable,
    InconsistentScale,
    NegativeFocal,
    ScaleDenominatorZero,
    DegenerateHomography,
};

const char *to_string(Status status);

}  // namespace sgh
