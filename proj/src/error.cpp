#include "annoreview/error.hpp"

namespace annoreview {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::EmptyExcerpt: return "EmptyExcerpt";
        case ErrorCode::UnknownCriterion: return "UnknownCriterion";
        case ErrorCode::UnknownAnnotation: return "UnknownAnnotation";
        case ErrorCode::EmptyComment: return "EmptyComment";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedXml: return "MalformedXml";
        case ErrorCode::DuplicateName: return "DuplicateName";
        case ErrorCode::DuplicateColor: return "DuplicateColor";
        case ErrorCode::EmptyCriteria: return "EmptyCriteria";
        case ErrorCode::TooManyCriteria: return "TooManyCriteria";
        case ErrorCode::InvalidCriterion: return "InvalidCriterion";
        case ErrorCode::MissingBinding: return "MissingBinding";
        case ErrorCode::UnknownPlaceholder: return "UnknownPlaceholder";
        case ErrorCode::UnparseableResponse: return "UnparseableResponse";
        case ErrorCode::EmptyItems: return "EmptyItems";
        case ErrorCode::NoAnnotations: return "NoAnnotations";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::AuthFailure: return "AuthFailure";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::BackendError: return "BackendError";
        case ErrorCode::MissingQuestion: return "MissingQuestion";
        case ErrorCode::EmptyReview: return "EmptyReview";
        case ErrorCode::NoReport: return "NoReport";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept {
    for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
        const auto code = static_cast<ErrorCode>(i);
        if (to_string(code) == name) return code;
    }
    return std::nullopt;
}

}  // namespace annoreview
