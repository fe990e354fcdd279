#pragma once

#include <stdexcept>
#include <string>

namespace ctax {

enum class ErrorCode {
    InvalidArgument = 1,
    OutOfRange,
    Io,
    Parse,
    MissingColumn,
    GridMismatch,
    NoInteriorSolution,
    NonConcave,
    MultipleOptima,
    NonMonotone,
    StepTooLarge,
    NoConvergence,
    SingularDenominator,
    DegenerateHazard,
    RateOutOfRange,
    NegativeVariance,
    RankDeficient,
    NonMonotoneAfterTax,
    InsufficientSupport,
    SparseDecile,
    SolverFailure,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoInteriorSolution: return "NoInteriorSolution";
    case ErrorCode::NonConcave: return "NonConcave";
    case ErrorCode::MultipleOptima: return "MultipleOptima";
    case ErrorCode::NonMonotone: return "NonMonotone";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularDenominator: return "SingularDenominator";
    case ErrorCode::DegenerateHazard: return "DegenerateHazard";
    case ErrorCode::RateOutOfRange: return "RateOutOfRange";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonMonotoneAfterTax: return "NonMonotoneAfterTax";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::SparseDecile: return "SparseDecile";
    case ErrorCode::SolverFailure: return "SolverFailure";
    }
    return "Unknown";
}

}  // namespace ctax
