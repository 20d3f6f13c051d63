#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace rubric {

enum class Errc {
    InvalidInput,
    ParseError,
    EmptyEssay,
    EmptyAfterNormalization,
    EmptyVocabulary,
    InvalidFeatures,
    VocabMismatch,
    DegenerateData,
    InfeasibleStratification,
    DuplicateDimension,
    UnresolvableModel,
    AllZeroWeights,
    TemplateMissing,
    UnknownPlaceholder,
    IncompleteResults,
    ExpertFailure,
    ChecksumMismatch,
    UnsupportedFormatVersion,
    IoFailure,
    IllegalTransition,
    UnknownJob,
    DuplicateEssay,
    InvalidEdit,
    LockTimeout,
    NotApproved,
    RenderFailure,
};

constexpr std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyEssay: return "EmptyEssay";
    case Errc::EmptyAfterNormalization: return "EmptyAfterNormalization";
    case Errc::EmptyVocabulary: return "EmptyVocabulary";
    case Errc::InvalidFeatures: return "InvalidFeatures";
    case Errc::VocabMismatch: return "VocabMismatch";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::InfeasibleStratification: return "InfeasibleStratification";
    case Errc::DuplicateDimension: return "DuplicateDimension";
    case Errc::UnresolvableModel: return "UnresolvableModel";
    case Errc::AllZeroWeights: return "AllZeroWeights";
    case Errc::TemplateMissing: return "TemplateMissing";
    case Errc::UnknownPlaceholder: return "UnknownPlaceholder";
    case Errc::IncompleteResults: return "IncompleteResults";
    case Errc::ExpertFailure: return "ExpertFailure";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::UnsupportedFormatVersion: return "UnsupportedFormatVersion";
    case Errc::IoFailure: return "IoFailure";
    case Errc::IllegalTransition: return "IllegalTransition";
    case Errc::UnknownJob: return "UnknownJob";
    case Errc::DuplicateEssay: return "DuplicateEssay";
    case Errc::InvalidEdit: return "InvalidEdit";
    case Errc::LockTimeout: return "LockTimeout";
    case Errc::NotApproved: return "NotApproved";
    case Errc::RenderFailure: return "RenderFailure";
    }
    return "Unknown";
}

// All library failures are reported through this exception. The dimension id
// is set when the failure can be attributed to one rubric dimension.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::string dimension_id = {})
            : std::runtime_error(std::string(to_string(code)) + ": " + message),
              m_code(code),
              m_message(message),
              m_dimension_id(std::move(dimension_id)) {}

    Errc code() const noexcept { return m_code; }
    const std::string& message() const noexcept { return m_message; }
    const std::string& dimension_id() const noexcept { return m_dimension_id; }

private:
    Errc m_code;
    std::string m_message;
    std::string m_dimension_id;
};

}  // namespace rubric
