#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "annoreview/anchor.hpp"
#include "annoreview/clock.hpp"
#include "annoreview/criteria.hpp"

namespace annoreview {

enum class Sentiment { Strength, Weakness, Unset };
enum class Origin { Llm, Human };
enum class FollowupKind { FactCheck, Social, Clarify };
enum class RelevanceFeedback { Relevant, Irrelevant, Unset };
enum class ReportStructure { ByCriteria, BySentiment };

[[nodiscard]] std::string_view to_string(Sentiment v);
[[nodiscard]] std::string_view to_string(Origin v);
[[nodiscard]] std::string_view to_string(FollowupKind v);
[[nodiscard]] std::string_view to_string(RelevanceFeedback v);
[[nodiscard]] std::string_view to_string(ReportStructure v);

// Parsers throw Error(InvalidArgument) on unknown values.
[[nodiscard]] Sentiment parse_sentiment(std::string_view s);
[[nodiscard]] Origin parse_origin(std::string_view s);
[[nodiscard]] FollowupKind parse_followup_kind(std::string_view s);
[[nodiscard]] RelevanceFeedback parse_relevance_feedback(std::string_view s);
[[nodiscard]] ReportStructure parse_report_structure(std::string_view s);

struct SavedOutput {
    FollowupKind kind = FollowupKind::Clarify;
    std::optional<std::string> question;
    std::string answer;
    std::string saved_at;

    friend bool operator==(const SavedOutput&, const SavedOutput&) = default;
};

struct Annotation {
    std::string id;
    std::string criterion_name;
    std::string excerpt;
    Anchor anchor;
    /// Other locations when the excerpt was ambiguous (anchor is the first).
    std::vector<Anchor> candidates;
    std::vector<std::string> comments;
    Sentiment sentiment = Sentiment::Unset;
    Origin origin = Origin::Llm;
    std::vector<SavedOutput> saved_outputs;
    RelevanceFeedback relevance_feedback = RelevanceFeedback::Unset;
    /// Set when the reviewer marks the annotation irrelevant.
    bool deemphasized = false;
    /// The manuscript was cut to fit the prompt budget when this was produced.
    bool context_truncated = false;
    /// The model returned an unrecognized sentiment value.
    bool parse_warning = false;
    /// Tombstone; kept so compiled reports can still resolve the id.
    bool deleted = false;
    std::string created_at;
    std::string updated_at;

    [[nodiscard]] bool ambiguous() const { return !candidates.empty(); }

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct CriterionReview {
    Criterion criterion;
    std::vector<Annotation> annotations;
    std::optional<std::string> compilation;
    std::optional<std::string> viewpoints;

    [[nodiscard]] std::vector<const Annotation*> live_annotations() const;

    friend bool operator==(const CriterionReview&, const CriterionReview&) = default;
};

struct ReportSection {
    std::string heading;
    /// Full section text: the written summary followed by the quoted excerpts.
    std::string body;
    std::vector<std::string> cited_annotation_ids;
    /// The written summary alone.
    std::string summary;

    friend bool operator==(const ReportSection&, const ReportSection&) = default;
};

struct ReviewReport {
    ReportStructure structure = ReportStructure::ByCriteria;
    std::optional<std::string> preamble;
    std::vector<ReportSection> sections;
    std::string generated_at;
    std::string editable_body;

    friend bool operator==(const ReviewReport&, const ReviewReport&) = default;
};

/// Fields for a new annotation. `candidates` is only set for ambiguous
/// anchors.
struct NewAnnotation {
    std::string criterion_name;
    std::string excerpt;
    Anchor anchor;
    Sentiment sentiment = Sentiment::Unset;
    Origin origin = Origin::Llm;
    std::vector<Anchor> candidates;
    std::optional<std::string> comment;
    bool context_truncated = false;
    bool parse_warning = false;
};

/// LLM-free rendering of a criterion's material so far.
struct Recap {
    std::string criterion;
    std::vector<Annotation> annotations;
    std::optional<std::string> compilation;
    std::optional<std::string> viewpoints;

    /// Annotations plus saved follow-up outputs.
    [[nodiscard]] std::size_t item_count() const;
    [[nodiscard]] std::string render() const;
};

/// Strengths / Weaknesses / Unclassified grouping of the live annotations.
struct SentimentPartition {
    std::vector<const Annotation*> strengths;
    std::vector<const Annotation*> weaknesses;
    std::vector<const Annotation*> unclassified;
};

/// Session-level review aggregate: one CriterionReview per configured
/// criterion. Not thread safe; the engine serializes access per session.
class Review {
public:
    Review(std::string session_id, const CriteriaSet& criteria, Clock clock = system_clock());

    [[nodiscard]] const std::string& session_id() const { return session_id_; }
    [[nodiscard]] const std::vector<CriterionReview>& criterion_reviews() const { return criterion_reviews_; }
    [[nodiscard]] CriteriaSet criteria() const;

    /// Throws UnknownCriterion.
    [[nodiscard]] const CriterionReview& criterion_review(std::string_view name) const;

    /// Throws UnknownCriterion, EmptyExcerpt, or InvalidArgument for a human
    /// annotation without an exact anchor.
    Annotation add_annotation(NewAnnotation fields);
    Annotation add_annotation(std::string_view criterion_name, std::string_view excerpt, const Anchor& anchor,
                              Sentiment sentiment, Origin origin);

    /// Lookup includes tombstoned annotations. Throws UnknownAnnotation.
    [[nodiscard]] const Annotation& annotation(std::string_view id) const;

    // Mutators throw UnknownAnnotation for unknown or deleted ids.
    Annotation update_sentiment(std::string_view id, Sentiment sentiment);
    /// Throws EmptyComment for blank text.
    Annotation add_comment(std::string_view id, std::string_view comment);
    Annotation save_output(std::string_view id, FollowupKind kind, std::optional<std::string> question,
                           std::string answer);
    Annotation set_relevance_feedback(std::string_view id, RelevanceFeedback verdict);
    Annotation remove_annotation(std::string_view id);

    /// Throws NoAnnotations when the criterion never had an annotation.
    void set_compilation(std::string_view criterion_name, std::string text);
    void set_viewpoints(std::string_view criterion_name, std::string text);

    /// Live annotations in creation order across all criteria.
    [[nodiscard]] std::vector<const Annotation*> annotations() const;
    [[nodiscard]] std::size_t live_annotation_count() const;

    /// Keeps reviews of criteria that survive (matched case-insensitively),
    /// drops removed criteria with all their annotations, adds empty reviews
    /// for new ones. A report citing a dropped annotation is discarded.
    void replace_criteria(const CriteriaSet& criteria);

    [[nodiscard]] const std::optional<ReviewReport>& report() const { return report_; }
    /// Throws InvalidArgument if a cited id does not exist.
    void set_report(ReviewReport report);

    /// Throws UnknownCriterion.
    [[nodiscard]] Recap recap(std::string_view criterion_name) const;

    [[nodiscard]] SentimentPartition partition_by_sentiment() const;

    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] static Review from_json(const nlohmann::json& doc, Clock clock = system_clock());

    friend bool operator==(const Review& a, const Review& b) {
        return a.session_id_ == b.session_id_ && a.criterion_reviews_ == b.criterion_reviews_ &&
               a.report_ == b.report_ && a.next_id_ == b.next_id_;
    }

private:
    CriterionReview& mutable_review(std::string_view name);
    Annotation& live_annotation(std::string_view id);
    [[nodiscard]] std::string now() const { return iso_timestamp(clock_()); }

    std::string session_id_;
    std::vector<CriterionReview> criterion_reviews_;
    std::optional<ReviewReport> report_;
    std::uint64_t next_id_ = 1;
    Clock clock_;
};

[[nodiscard]] nlohmann::json anchor_to_json(const Anchor& anchor);
[[nodiscard]] Anchor anchor_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json annotation_to_json(const Annotation& a);
[[nodiscard]] nlohmann::json report_to_json(const ReviewReport& r);

}  // namespace annoreview
