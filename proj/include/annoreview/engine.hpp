#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "annoreview/anchor.hpp"
#include "annoreview/clock.hpp"
#include "annoreview/config.hpp"
#include "annoreview/criteria.hpp"
#include "annoreview/document_store.hpp"
#include "annoreview/llm_gateway.hpp"
#include "annoreview/prompts.hpp"
#include "annoreview/review_model.hpp"

namespace annoreview {

/// A reviewer-created annotation. Give either the selected raw range or
/// the excerpt text; an excerpt must occur exactly once.
struct HumanAnnotation {
    std::string criterion;
    std::optional<IndexRange> raw_range;
    std::optional<std::string> excerpt;
    Sentiment sentiment = Sentiment::Unset;
    std::optional<std::string> comment;
};

/// Sniffs "%PDF-" at the start of the bytes.
[[nodiscard]] SourceKind detect_source_kind(std::string_view bytes);

/// Session orchestration: ingest, annotate, refine, compile and report.
/// Each session has one writer lock; gateway calls run outside it, so
/// distinct criteria of a session can have requests in flight together.
/// Every mutation is written through to `<data_root>/<session>/review.json`.
class ReviewEngine {
public:
    /// Without a backend one is built from `config.llm`.
    explicit ReviewEngine(EngineConfig config, std::shared_ptr<Backend> backend = nullptr,
                          Clock clock = system_clock());
    ~ReviewEngine();
    ReviewEngine(const ReviewEngine&) = delete;
    ReviewEngine& operator=(const ReviewEngine&) = delete;

    [[nodiscard]] const EngineConfig& config() const { return config_; }
    [[nodiscard]] Gateway& gateway() { return gateway_; }
    [[nodiscard]] const Gateway& gateway() const { return gateway_; }
    [[nodiscard]] const PromptLibrary& prompts() const { return prompts_; }

    // --- sessions ---
    /// Starts a session with the default criteria.
    std::string create_session(std::string_view source_bytes, SourceKind kind);
    /// Deletes the manuscript, review state and call log of the session.
    void end_session(const std::string& session_id);
    [[nodiscard]] bool is_active(const std::string& session_id) const;
    [[nodiscard]] std::vector<std::string> sessions() const;
    [[nodiscard]] std::shared_ptr<const Manuscript> manuscript(const std::string& session_id) const;
    [[nodiscard]] std::filesystem::path session_dir(const std::string& session_id) const;

    // --- criteria ---
    [[nodiscard]] CriteriaSet criteria(const std::string& session_id) const;
    /// Annotations of removed criteria are dropped with them.
    CriteriaSet set_criteria(const std::string& session_id, const CriteriaSet& criteria);

    // --- annotations ---
    std::vector<Annotation> annotate_criterion(const std::string& session_id, std::string_view criterion,
                                               std::optional<int> num_excerpts = std::nullopt);
    /// One request per criterion, issued concurrently and committed in
    /// criterion order. Results of successful criteria are kept when
    /// another fails; the first failure is then rethrown.
    std::vector<Annotation> annotate_all(const std::string& session_id,
                                         std::optional<int> num_excerpts = std::nullopt);
    Annotation add_human_annotation(const std::string& session_id, const HumanAnnotation& request);

    [[nodiscard]] std::vector<Annotation> annotations(const std::string& session_id,
                                                      bool include_deleted = false) const;
    [[nodiscard]] Annotation annotation(const std::string& session_id, std::string_view id) const;
    Annotation update_sentiment(const std::string& session_id, std::string_view id, Sentiment sentiment);
    Annotation add_comment(const std::string& session_id, std::string_view id, std::string_view comment);
    /// Also appends a line to `<data_root>/feedback.log`.
    Annotation set_relevance_feedback(const std::string& session_id, std::string_view id, RelevanceFeedback verdict);
    Annotation remove_annotation(const std::string& session_id, std::string_view id);
    Annotation save_output(const std::string& session_id, std::string_view id, FollowupKind kind,
                           std::optional<std::string> question, std::string answer);

    /// Throws MissingQuestion for a clarify request without a question.
    std::string annotation_followup(const std::string& session_id, std::string_view id, FollowupKind kind,
                                    std::optional<std::string> question = std::nullopt);

    // --- per-criterion synthesis ---
    std::string compile_criterion(const std::string& session_id, std::string_view criterion);
    std::string viewpoints_criterion(const std::string& session_id, std::string_view criterion);
    /// Local rendering; never calls the gateway.
    [[nodiscard]] Recap recap(const std::string& session_id, std::string_view criterion) const;

    // --- report ---
    ReviewReport build_report(const std::string& session_id, ReportStructure structure);
    /// Replaces the editable body of the current report. Throws NoReport.
    ReviewReport update_report_body(const std::string& session_id, std::string body);
    [[nodiscard]] std::optional<ReviewReport> report(const std::string& session_id) const;
    /// Throws NoReport.
    [[nodiscard]] std::string export_report_html(const std::string& session_id) const;
    /// Writes the HTML to `destination`, or to `<export_root>/report-<session>.html`.
    std::filesystem::path export_report(const std::string& session_id,
                                        const std::optional<std::filesystem::path>& destination = std::nullopt) const;

    // --- inspection ---
    [[nodiscard]] Review review(const std::string& session_id) const;
    [[nodiscard]] nlohmann::json review_json(const std::string& session_id) const;
    [[nodiscard]] std::vector<CallLogEntry> call_log(const std::string& session_id) const;
    [[nodiscard]] std::filesystem::path feedback_log_path() const;

private:
    struct Session;
    struct PendingAnnotate;

    [[nodiscard]] std::shared_ptr<Session> find_session(const std::string& session_id) const;
    PendingAnnotate fetch_annotations(const std::string& session_id, std::string_view criterion,
                                      std::optional<int> num_excerpts);
    std::vector<Annotation> commit_annotations(const std::string& session_id, PendingAnnotate pending);
    GatewayResponse call_gateway(const std::shared_ptr<Session>& session, TemplateName name, std::string prompt,
                                 const std::string& criterion, int requested_items = 0);
    std::string synthesize(const std::string& session_id, std::string_view criterion, TemplateName name);
    void persist(Session& session) const;
    void persist_calls(Session& session) const;
    void append_audit(Session& session, const nlohmann::json& entry) const;
    [[nodiscard]] Bindings criterion_bindings(const Criterion& c) const;
    [[nodiscard]] std::pair<std::string, bool> manuscript_for_prompt(const Manuscript& m) const;
    [[nodiscard]] LocateOptions locate_options() const;

    EngineConfig config_;
    Clock clock_;
    PromptLibrary prompts_;
    DocumentStore store_;
    Gateway gateway_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    mutable std::mutex feedback_mutex_;
};

/// Renders a report as a self-contained XHTML page with inline styles.
[[nodiscard]] std::string render_report_html(const Review& review, const ReviewReport& report);

/// The editable body a freshly built report starts with.
[[nodiscard]] std::string compose_report_body(const ReviewReport& report);

}  // namespace annoreview
