#include "diacdm/error.hpp"

namespace diacdm {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::NonFinite: return "NonFinite";
        case Errc::NotScalarLoss: return "NotScalarLoss";
        case Errc::ZeroFan: return "ZeroFan";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::UnbalancedParens: return "UnbalancedParens";
        case Errc::DuplicateVariable: return "DuplicateVariable";
        case Errc::DanglingReference: return "DanglingReference";
        case Errc::MalformedPenman: return "MalformedPenman";
        case Errc::EmptyFile: return "EmptyFile";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::MissingFile: return "MissingFile";
        case Errc::MalformedRecord: return "MalformedRecord";
        case Errc::UnknownConcept: return "UnknownConcept";
        case Errc::UnknownStudent: return "UnknownStudent";
        case Errc::DuplicateRound: return "DuplicateRound";
        case Errc::BadCorrectness: return "BadCorrectness";
        case Errc::TooFewRounds: return "TooFewRounds";
        case Errc::InvalidLabel: return "InvalidLabel";
        case Errc::DegenerateLabels: return "DegenerateLabels";
        case Errc::TooFewStudents: return "TooFewStudents";
        case Errc::EmptySplit: return "EmptySplit";
        case Errc::NonFiniteLoss: return "NonFiniteLoss";
        case Errc::IoError: return "IoError";
        case Errc::BadConfig: return "BadConfig";
        case Errc::BadCheckpoint: return "BadCheckpoint";
    }
    return "Unknown";
}

bool is_data_error(Errc code) noexcept {
    switch (code) {
        case Errc::EmptyInput:
        case Errc::UnbalancedParens:
        case Errc::DuplicateVariable:
        case Errc::DanglingReference:
        case Errc::MalformedPenman:
        case Errc::EmptyFile:
        case Errc::DimMismatch:
        case Errc::DuplicateId:
        case Errc::NonFiniteValue:
        case Errc::MissingFile:
        case Errc::MalformedRecord:
        case Errc::UnknownConcept:
        case Errc::UnknownStudent:
        case Errc::DuplicateRound:
        case Errc::BadCorrectness:
        case Errc::TooFewRounds:
        case Errc::InvalidLabel:
        case Errc::BadConfig:
        case Errc::BadCheckpoint:
        case Errc::EmptySplit:
            return true;
        default:
            return false;
    }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

}  // namespace diacdm
