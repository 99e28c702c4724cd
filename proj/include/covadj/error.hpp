#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covadj {

enum class ErrorCode {
    InvalidArgument,
    NotPositiveDefinite,
    NotPositiveSemiDefinite,
    DegenerateResponse,
    SchemaMismatch,
    NotTwoArms,
    EmptyDataset,
    ConstantColumn,
    TooManyCovariates,
    CategoricalUnsupported,
    CompleteConfounding,
    RankDeficient,
    NotCategorical,
    EmptyMargin,
    DomainError,
    TooManyRedraws,
    RouteDiscrepancy,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and the simulation engine can decide
/// whether a replicate is redrawable.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace covadj
