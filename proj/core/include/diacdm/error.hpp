#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diacdm {

enum class Errc {
    // tensor / optimizer
    ShapeMismatch,
    NonFinite,
    NotScalarLoss,
    ZeroFan,
    // penman
    EmptyInput,
    UnbalancedParens,
    DuplicateVariable,
    DanglingReference,
    MalformedPenman,
    // embeddings
    EmptyFile,
    DimMismatch,
    DuplicateId,
    NonFiniteValue,
    // data
    MissingFile,
    MalformedRecord,
    UnknownConcept,
    UnknownStudent,
    DuplicateRound,
    BadCorrectness,
    TooFewRounds,
    // predict / metrics
    InvalidLabel,
    DegenerateLabels,
    TooFewStudents,
    // trainer
    EmptySplit,
    NonFiniteLoss,
    // io / config
    IoError,
    BadConfig,
    BadCheckpoint,
};

std::string_view errc_name(Errc code) noexcept;

/// True for errors caused by the content of user-supplied files, as
/// opposed to runtime failures inside the engine.
bool is_data_error(Errc code) noexcept;

class Error : public std::runtime_error {
   public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return code_; }

   private:
    Errc code_;
};

}  // namespace diacdm
