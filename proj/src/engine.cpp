#include "annoreview/engine.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include "annoreview/error.hpp"
#include "annoreview/text.hpp"

using nlohmann::json;

namespace annoreview {

namespace {

constexpr std::string_view kReviewFile = "review.json";
constexpr std::string_view kCallsFile = "calls.jsonl";
constexpr std::string_view kAuditFile = "audit.jsonl";

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

void append_line(const std::filesystem::path& path, const std::string& line) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::IoError, "cannot append to " + path.string());
    out << line << '\n';
}

std::string page_label(const Annotation& a) {
    return a.anchor.page ? "p. " + std::to_string(*a.anchor.page) : "page unknown";
}

std::string evidence_line(const Annotation& a, bool with_criterion) {
    std::string line = "- [" + a.id + "] \"" + a.excerpt + "\" (";
    if (with_criterion) line += a.criterion_name + ", ";
    line += page_label(a) + ", " + std::string(to_string(a.sentiment)) + ")";
    return line;
}

std::string section_body(const std::string& summary, const std::vector<Annotation>& cited, bool with_criterion) {
    std::string body = summary;
    if (cited.empty()) return body;
    body += "\n\nEvidence:";
    for (const auto& a : cited) body += "\n" + evidence_line(a, with_criterion);
    return body;
}

struct SentimentGroup {
    std::string_view heading;
    std::string_view description;
    std::vector<Annotation> annotations;
};

constexpr std::string_view kEmptyGroupBody = "No annotations fall into this group.";

}  // namespace

SourceKind detect_source_kind(std::string_view bytes) {
    return bytes.substr(0, 5) == "%PDF-" ? SourceKind::Pdf : SourceKind::PlainText;
}

struct ReviewEngine::Session {
    std::string id;
    std::filesystem::path dir;
    std::shared_ptr<const Manuscript> manuscript;
    std::mutex mutex;
    Review review;
    bool ended = false;

    Session(std::string sid, std::filesystem::path d, std::shared_ptr<const Manuscript> m, Review r)
        : id(std::move(sid)), dir(std::move(d)), manuscript(std::move(m)), review(std::move(r)) {}

    void check_active() const {
        if (ended) throw Error(ErrorCode::UnknownSession, "session '" + id + "' has ended");
    }
};

struct ReviewEngine::PendingAnnotate {
    std::string criterion;
    std::vector<NewAnnotation> items;
};

ReviewEngine::ReviewEngine(EngineConfig config, std::shared_ptr<Backend> backend, Clock clock)
    : config_((config.validate(), std::move(config))),
      clock_(std::move(clock)),
      prompts_(config_.prompts.directory ? PromptLibrary::load(*config_.prompts.directory) : PromptLibrary::defaults()),
      store_(config_.data_root, default_pdf_extractor(), clock_),
      gateway_(backend ? std::move(backend) : Gateway::make_backend(config_.llm),
               GatewayOptions::from_config(config_.llm), clock_) {}

ReviewEngine::~ReviewEngine() = default;

// --- sessions ----------------------------------------------------------------

std::shared_ptr<ReviewEngine::Session> ReviewEngine::find_session(const std::string& session_id) const {
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no active session '" + session_id + "'");
    return it->second;
}

std::string ReviewEngine::create_session(std::string_view source_bytes, SourceKind kind) {
    auto manuscript = store_.ingest(source_bytes, kind);
    const auto& id = manuscript->session_id;
    auto session = std::make_shared<Session>(id, store_.session_dir(id), manuscript,
                                             Review(id, default_criteria(), clock_));
    {
        std::lock_guard lock(session->mutex);
        persist(*session);
    }
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(id, std::move(session));
    return id;
}

void ReviewEngine::end_session(const std::string& session_id) {
    std::shared_ptr<Session> session;
    {
        std::lock_guard lock(sessions_mutex_);
        const auto it = sessions_.find(session_id);
        if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no active session '" + session_id + "'");
        session = it->second;
        sessions_.erase(it);
    }
    std::lock_guard lock(session->mutex);
    session->ended = true;
    store_.end_session(session_id);
    gateway_.purge_session(session_id);
}

bool ReviewEngine::is_active(const std::string& session_id) const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.count(session_id) != 0;
}

std::vector<std::string> ReviewEngine::sessions() const {
    std::lock_guard lock(sessions_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

std::shared_ptr<const Manuscript> ReviewEngine::manuscript(const std::string& session_id) const {
    return find_session(session_id)->manuscript;
}

std::filesystem::path ReviewEngine::session_dir(const std::string& session_id) const {
    return store_.session_dir(session_id);
}

// --- persistence -------------------------------------------------------------

void ReviewEngine::persist(Session& session) const {
    if (session.ended) return;
    write_file_atomic(session.dir / kReviewFile, session.review.to_json().dump(2));
}

void ReviewEngine::persist_calls(Session& session) const {
    if (session.ended) return;
    std::string lines;
    for (const auto& e : gateway_.call_log(session.id)) {
        lines += json{{"request_id", e.request_id},
                      {"template", to_string(e.template_name)},
                      {"timestamp", e.timestamp}}
                     .dump();
        lines += '\n';
    }
    write_file_atomic(session.dir / kCallsFile, lines);
}

void ReviewEngine::append_audit(Session& session, const json& entry) const {
    if (session.ended) return;
    append_line(session.dir / kAuditFile, entry.dump());
}

std::filesystem::path ReviewEngine::feedback_log_path() const { return config_.data_root / "feedback.log"; }

// --- helpers -----------------------------------------------------------------

GatewayResponse ReviewEngine::call_gateway(const std::shared_ptr<Session>& session, TemplateName name,
                                           std::string prompt, const std::string& criterion, int requested_items) {
    auto after = [&] {
        std::lock_guard lock(session->mutex);
        if (session->ended) {
            // the session ended while the request was in flight
            gateway_.purge_session(session->id);
        } else {
            persist_calls(*session);
        }
    };
    try {
        auto response = gateway_.complete(session->id, name, std::move(prompt), criterion, requested_items);
        after();
        return response;
    } catch (...) {
        after();
        throw;
    }
}

Bindings ReviewEngine::criterion_bindings(const Criterion& c) const {
    return {{"criterion_name", c.name},
            {"criterion_description", c.description},
            {"recommendations", format_recommendations(c.recommendations)}};
}

std::pair<std::string, bool> ReviewEngine::manuscript_for_prompt(const Manuscript& m) const {
    auto raw = m.raw_utf8();
    std::replace(raw.begin(), raw.end(), '\f', '\n');
    auto fitted = fit_to_budget(raw, config_.prompts.manuscript_char_budget);
    return {std::move(fitted.text), fitted.truncated};
}

LocateOptions ReviewEngine::locate_options() const {
    LocateOptions o;
    o.max_ratio = config_.anchor.max_ratio;
    o.ambiguity_band = config_.anchor.ambiguity_band;
    return o;
}

// --- criteria ----------------------------------------------------------------

CriteriaSet ReviewEngine::criteria(const std::string& session_id) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    return s->review.criteria();
}

CriteriaSet ReviewEngine::set_criteria(const std::string& session_id, const CriteriaSet& criteria) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    s->review.replace_criteria(criteria);
    persist(*s);
    return s->review.criteria();
}

// --- annotations -------------------------------------------------------------

ReviewEngine::PendingAnnotate ReviewEngine::fetch_annotations(const std::string& session_id,
                                                              std::string_view criterion,
                                                              std::optional<int> num_excerpts) {
    const int count = num_excerpts.value_or(config_.num_excerpts_default);
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "num_excerpts must be at least 1");
    auto s = find_session(session_id);

    PendingAnnotate pending;
    std::string prompt;
    bool truncated = false;
    {
        std::lock_guard lock(s->mutex);
        s->check_active();
        const auto& c = s->review.criterion_review(criterion).criterion;
        pending.criterion = c.name;
        auto bindings = criterion_bindings(c);
        bindings["num_excerpts"] = std::to_string(count);
        auto [text, was_truncated] = manuscript_for_prompt(*s->manuscript);
        bindings["manuscript_text"] = std::move(text);
        truncated = was_truncated;
        prompt = prompts_.render(TemplateName::Annotate, bindings);
    }

    const auto response = call_gateway(s, TemplateName::Annotate, std::move(prompt), pending.criterion, count);
    const auto parsed = parse_annotate_response(response.text, static_cast<std::size_t>(count));

    const auto options = locate_options();
    for (const auto& item : parsed.items) {
        NewAnnotation fields;
        fields.criterion_name = pending.criterion;
        fields.excerpt = item.excerpt;
        fields.sentiment = item.sentiment;
        fields.origin = Origin::Llm;
        fields.comment = item.comment;
        fields.context_truncated = truncated;
        fields.parse_warning = item.unknown_sentiment;
        const auto located = locate(*s->manuscript, item.excerpt, options);
        if (const auto* anchor = std::get_if<Anchor>(&located)) {
            fields.anchor = *anchor;
        } else if (const auto* set = std::get_if<AnchorCandidateSet>(&located)) {
            if (config_.anchor.auto_pick == AutoPick::Earliest) {
                fields.anchor = pick_earliest(*set);
            } else {
                fields.anchor = set->candidates.front();
                fields.candidates = set->candidates;
            }
        } else {
            fields.anchor = Anchor::unanchored();
        }
        pending.items.push_back(std::move(fields));
    }
    return pending;
}

std::vector<Annotation> ReviewEngine::commit_annotations(const std::string& session_id, PendingAnnotate pending) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    (void)s->review.criterion_review(pending.criterion);
    std::vector<Annotation> added;
    for (auto& fields : pending.items) added.push_back(s->review.add_annotation(std::move(fields)));
    persist(*s);
    return added;
}

std::vector<Annotation> ReviewEngine::annotate_criterion(const std::string& session_id, std::string_view criterion,
                                                         std::optional<int> num_excerpts) {
    return commit_annotations(session_id, fetch_annotations(session_id, criterion, num_excerpts));
}

std::vector<Annotation> ReviewEngine::annotate_all(const std::string& session_id, std::optional<int> num_excerpts) {
    std::vector<std::string> names;
    const auto set = criteria(session_id);
    for (const auto& c : set.criteria()) names.push_back(c.name);

    std::vector<std::future<PendingAnnotate>> futures;
    futures.reserve(names.size());
    for (const auto& name : names) {
        futures.push_back(std::async(std::launch::async, [this, &session_id, name, num_excerpts] {
            return fetch_annotations(session_id, name, num_excerpts);
        }));
    }
    std::vector<Annotation> added;
    std::exception_ptr first_error;
    for (auto& f : futures) {
        try {
            auto batch = commit_annotations(session_id, f.get());
            added.insert(added.end(), batch.begin(), batch.end());
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return added;
}

Annotation ReviewEngine::add_human_annotation(const std::string& session_id, const HumanAnnotation& request) {
    auto s = find_session(session_id);
    const auto& m = *s->manuscript;
    NewAnnotation fields;
    fields.criterion_name = request.criterion;
    fields.sentiment = request.sentiment;
    fields.origin = Origin::Human;
    fields.comment = request.comment;
    if (request.raw_range) {
        const auto r = *request.raw_range;
        if (r.empty() || r.end > m.raw_text.size()) {
            throw Error(ErrorCode::InvalidArgument, "selection [" + std::to_string(r.begin) + ", " +
                                                        std::to_string(r.end) + ") is outside the manuscript");
        }
        fields.excerpt = m.raw_slice(r);
        fields.anchor.kind = MatchKind::Exact;
        fields.anchor.raw_range = r;
        fields.anchor.page = m.page_at(r.begin);
    } else if (request.excerpt) {
        fields.excerpt = *request.excerpt;
        const auto located = locate(m, *request.excerpt, locate_options());
        const auto* anchor = std::get_if<Anchor>(&located);
        if (anchor == nullptr || anchor->kind != MatchKind::Exact) {
            throw Error(ErrorCode::InvalidArgument,
                        "the excerpt must occur exactly once in the manuscript; send the selected range instead");
        }
        fields.anchor = *anchor;
    } else {
        throw Error(ErrorCode::InvalidArgument, "a reviewer annotation needs a range or an excerpt");
    }
    if (trim(fields.excerpt).empty()) throw Error(ErrorCode::EmptyExcerpt, "selection is blank");

    std::lock_guard lock(s->mutex);
    s->check_active();
    auto a = s->review.add_annotation(std::move(fields));
    persist(*s);
    return a;
}

std::vector<Annotation> ReviewEngine::annotations(const std::string& session_id, bool include_deleted) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    std::vector<Annotation> out;
    if (include_deleted) {
        for (const auto& cr : s->review.criterion_reviews()) {
            out.insert(out.end(), cr.annotations.begin(), cr.annotations.end());
        }
        std::sort(out.begin(), out.end(), [](const Annotation& x, const Annotation& y) {
            return std::stoull(x.id.substr(1)) < std::stoull(y.id.substr(1));
        });
    } else {
        for (const auto* a : s->review.annotations()) out.push_back(*a);
    }
    return out;
}

Annotation ReviewEngine::annotation(const std::string& session_id, std::string_view id) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    return s->review.annotation(id);
}

Annotation ReviewEngine::update_sentiment(const std::string& session_id, std::string_view id, Sentiment sentiment) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    auto a = s->review.update_sentiment(id, sentiment);
    persist(*s);
    return a;
}

Annotation ReviewEngine::add_comment(const std::string& session_id, std::string_view id, std::string_view comment) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    auto a = s->review.add_comment(id, comment);
    persist(*s);
    return a;
}

Annotation ReviewEngine::set_relevance_feedback(const std::string& session_id, std::string_view id,
                                                RelevanceFeedback verdict) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    auto a = s->review.set_relevance_feedback(id, verdict);
    persist(*s);
    // No manuscript text goes into this log; it outlives the session.
    const json line{{"timestamp", a.updated_at},    {"session_id", session_id},
                    {"annotation_id", a.id},        {"criterion", a.criterion_name},
                    {"verdict", to_string(verdict)}, {"origin", to_string(a.origin)},
                    {"match_kind", to_string(a.anchor.kind)}};
    std::lock_guard feedback_lock(feedback_mutex_);
    append_line(feedback_log_path(), line.dump());
    return a;
}

Annotation ReviewEngine::remove_annotation(const std::string& session_id, std::string_view id) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    auto a = s->review.remove_annotation(id);
    persist(*s);
    return a;
}

Annotation ReviewEngine::save_output(const std::string& session_id, std::string_view id, FollowupKind kind,
                                     std::optional<std::string> question, std::string answer) {
    if (trim(answer).empty()) throw Error(ErrorCode::InvalidArgument, "saved output is empty");
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    auto a = s->review.save_output(id, kind, std::move(question), std::move(answer));
    persist(*s);
    return a;
}

std::string ReviewEngine::annotation_followup(const std::string& session_id, std::string_view id, FollowupKind kind,
                                              std::optional<std::string> question) {
    auto s = find_session(session_id);
    std::string prompt;
    std::string criterion;
    {
        std::lock_guard lock(s->mutex);
        s->check_active();
        const auto& a = s->review.annotation(id);
        if (a.deleted) throw Error(ErrorCode::UnknownAnnotation, "annotation '" + std::string(id) + "' was removed");
        if (kind == FollowupKind::Clarify && (!question || trim(*question).empty())) {
            throw Error(ErrorCode::MissingQuestion, "clarify needs a question");
        }
        const auto& c = s->review.criterion_review(a.criterion_name).criterion;
        criterion = c.name;
        auto bindings = criterion_bindings(c);
        bindings["excerpt"] = a.excerpt;
        bindings["manuscript_text"] = manuscript_for_prompt(*s->manuscript).first;
        if (question) bindings["question"] = trim(*question);
        prompt = prompts_.render(template_for(kind), bindings);
    }
    return call_gateway(s, template_for(kind), std::move(prompt), criterion).text;
}

// --- synthesis ---------------------------------------------------------------

std::string ReviewEngine::synthesize(const std::string& session_id, std::string_view criterion, TemplateName name) {
    auto s = find_session(session_id);
    std::string prompt;
    std::string canonical;
    {
        std::lock_guard lock(s->mutex);
        s->check_active();
        const auto& cr = s->review.criterion_review(criterion);
        canonical = cr.criterion.name;
        auto bindings = criterion_bindings(cr.criterion);
        bindings["annotations_digest"] = digest_annotations(cr);
        prompt = prompts_.render(name, bindings);
    }
    auto response = call_gateway(s, name, std::move(prompt), canonical);

    std::lock_guard lock(s->mutex);
    s->check_active();
    const auto& cr = s->review.criterion_review(canonical);
    const bool is_compile = name == TemplateName::Compile;
    const auto& previous = is_compile ? cr.compilation : cr.viewpoints;
    append_audit(*s, {{"timestamp", iso_timestamp(clock_())},
                      {"criterion", canonical},
                      {"field", is_compile ? "compilation" : "viewpoints"},
                      {"previous", previous ? json(*previous) : json(nullptr)}});
    if (is_compile) {
        s->review.set_compilation(canonical, response.text);
    } else {
        s->review.set_viewpoints(canonical, response.text);
    }
    persist(*s);
    return response.text;
}

std::string ReviewEngine::compile_criterion(const std::string& session_id, std::string_view criterion) {
    return synthesize(session_id, criterion, TemplateName::Compile);
}

std::string ReviewEngine::viewpoints_criterion(const std::string& session_id, std::string_view criterion) {
    return synthesize(session_id, criterion, TemplateName::Viewpoints);
}

Recap ReviewEngine::recap(const std::string& session_id, std::string_view criterion) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    return s->review.recap(criterion);
}

// --- report ------------------------------------------------------------------

ReviewReport ReviewEngine::build_report(const std::string& session_id, ReportStructure structure) {
    auto s = find_session(session_id);
    ReviewReport report;
    report.structure = structure;

    if (structure == ReportStructure::ByCriteria) {
        std::vector<std::string> pending_compile;
        {
            std::lock_guard lock(s->mutex);
            s->check_active();
            if (s->review.live_annotation_count() == 0) {
                throw Error(ErrorCode::EmptyReview, "the review has no annotations yet");
            }
            for (const auto& cr : s->review.criterion_reviews()) {
                if (!cr.live_annotations().empty() && !cr.compilation) pending_compile.push_back(cr.criterion.name);
            }
        }
        for (const auto& name : pending_compile) (void)compile_criterion(session_id, name);

        std::string names;
        std::string digest;
        {
            std::lock_guard lock(s->mutex);
            s->check_active();
            for (const auto& cr : s->review.criterion_reviews()) {
                const auto live = cr.live_annotations();
                if (live.empty() && !cr.compilation) continue;
                std::vector<Annotation> cited;
                for (const auto* a : live) cited.push_back(*a);
                ReportSection section;
                section.heading = cr.criterion.name;
                section.summary = cr.compilation.value_or("");
                section.body = section_body(section.summary, cited, false);
                for (const auto& a : cited) section.cited_annotation_ids.push_back(a.id);
                report.sections.push_back(std::move(section));

                names += names.empty() ? cr.criterion.name : ", " + cr.criterion.name;
                if (!digest.empty()) digest += "\n\n";
                digest += "Criterion: " + cr.criterion.name + "\nSummary: " + cr.compilation.value_or("");
                if (!live.empty()) digest += "\nAnnotations:\n" + digest_annotations(cr);
            }
        }
        const auto prompt =
            prompts_.render(TemplateName::ReportByCriteria, {{"criterion_name", names}, {"annotations_digest", digest}});
        report.preamble = call_gateway(s, TemplateName::ReportByCriteria, prompt, "").text;
    } else {
        std::vector<SentimentGroup> groups{
            {"Strengths", "Aspects in which the manuscript meets the review criteria.", {}},
            {"Weaknesses", "Aspects in which the manuscript falls short of the review criteria.", {}},
            {"Unclassified", "Annotated passages whose sentiment has not been decided.", {}},
        };
        {
            std::lock_guard lock(s->mutex);
            s->check_active();
            if (s->review.live_annotation_count() == 0) {
                throw Error(ErrorCode::EmptyReview, "the review has no annotations yet");
            }
            const auto partition = s->review.partition_by_sentiment();
            for (const auto* a : partition.strengths) groups[0].annotations.push_back(*a);
            for (const auto* a : partition.weaknesses) groups[1].annotations.push_back(*a);
            for (const auto* a : partition.unclassified) groups[2].annotations.push_back(*a);
        }
        if (groups[2].annotations.empty()) groups.pop_back();
        for (const auto& g : groups) {
            ReportSection section;
            section.heading = std::string(g.heading);
            if (g.annotations.empty()) {
                section.summary = std::string(kEmptyGroupBody);
            } else {
                std::vector<const Annotation*> ptrs;
                for (const auto& a : g.annotations) ptrs.push_back(&a);
                const auto prompt = prompts_.render(TemplateName::ReportBySentiment,
                                                    {{"criterion_name", std::string(g.heading)},
                                                     {"criterion_description", std::string(g.description)},
                                                     {"annotations_digest", digest_annotation_list(ptrs)}});
                section.summary =
                    call_gateway(s, TemplateName::ReportBySentiment, prompt, std::string(g.heading)).text;
            }
            section.body = section_body(section.summary, g.annotations, true);
            for (const auto& a : g.annotations) section.cited_annotation_ids.push_back(a.id);
            report.sections.push_back(std::move(section));
        }
    }

    report.generated_at = iso_timestamp(clock_());
    report.editable_body = compose_report_body(report);
    std::lock_guard lock(s->mutex);
    s->check_active();
    s->review.set_report(report);
    persist(*s);
    return report;
}

ReviewReport ReviewEngine::update_report_body(const std::string& session_id, std::string body) {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    if (!s->review.report()) throw Error(ErrorCode::NoReport, "no report has been built for this session");
    auto report = *s->review.report();
    report.editable_body = std::move(body);
    s->review.set_report(report);
    persist(*s);
    return report;
}

std::optional<ReviewReport> ReviewEngine::report(const std::string& session_id) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    return s->review.report();
}

std::string ReviewEngine::export_report_html(const std::string& session_id) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    if (!s->review.report()) throw Error(ErrorCode::NoReport, "no report has been built for this session");
    return render_report_html(s->review, *s->review.report());
}

std::filesystem::path ReviewEngine::export_report(const std::string& session_id,
                                                  const std::optional<std::filesystem::path>& destination) const {
    const auto html = export_report_html(session_id);
    const auto path = destination ? *destination : config_.export_root / ("report-" + session_id + ".html");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_file_atomic(path, html);
    return path;
}

// --- inspection --------------------------------------------------------------

Review ReviewEngine::review(const std::string& session_id) const {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    s->check_active();
    return s->review;
}

json ReviewEngine::review_json(const std::string& session_id) const { return review(session_id).to_json(); }

std::vector<CallLogEntry> ReviewEngine::call_log(const std::string& session_id) const {
    (void)find_session(session_id);
    return gateway_.call_log(session_id);
}

std::string compose_report_body(const ReviewReport& report) {
    std::string body;
    if (report.preamble && !report.preamble->empty()) body += *report.preamble + "\n\n";
    for (const auto& s : report.sections) body += "## " + s.heading + "\n\n" + s.body + "\n\n";
    while (!body.empty() && body.back() == '\n') body.pop_back();
    return body;
}

}  // namespace annoreview
