#include "covadj/error.hpp"

namespace covadj {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::NotPositiveSemiDefinite: return "NotPositiveSemiDefinite";
        case ErrorCode::DegenerateResponse: return "DegenerateResponse";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::NotTwoArms: return "NotTwoArms";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::ConstantColumn: return "ConstantColumn";
        case ErrorCode::TooManyCovariates: return "TooManyCovariates";
        case ErrorCode::CategoricalUnsupported: return "CategoricalUnsupported";
        case ErrorCode::CompleteConfounding: return "CompleteConfounding";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::NotCategorical: return "NotCategorical";
        case ErrorCode::EmptyMargin: return "EmptyMargin";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::TooManyRedraws: return "TooManyRedraws";
        case ErrorCode::RouteDiscrepancy: return "RouteDiscrepancy";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace covadj
