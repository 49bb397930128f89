#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace annoreview {

enum class ErrorCode {
    // document-store
    EmptyInput,
    UnsupportedFormat,
    UnknownSession,
    NotFound,
    // anchor / review-model
    EmptyExcerpt,
    UnknownCriterion,
    UnknownAnnotation,
    EmptyComment,
    InvalidArgument,
    // criteria-config
    MalformedXml,
    DuplicateName,
    DuplicateColor,
    EmptyCriteria,
    TooManyCriteria,
    InvalidCriterion,
    // prompt-templates
    MissingBinding,
    UnknownPlaceholder,
    UnparseableResponse,
    EmptyItems,
    NoAnnotations,
    // llm-gateway
    Timeout,
    AuthFailure,
    RateLimited,
    BackendError,
    // review-engine
    MissingQuestion,
    EmptyReview,
    NoReport,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;
[[nodiscard]] std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace annoreview
