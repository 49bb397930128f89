#include "annoreview/review_model.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "annoreview/error.hpp"
#include "annoreview/text.hpp"

using nlohmann::json;

namespace annoreview {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<std::string_view, Enum> (&table)[N], std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::pair<std::string_view, Sentiment> kSentiments[] = {
    {"strength", Sentiment::Strength}, {"weakness", Sentiment::Weakness}, {"unset", Sentiment::Unset}};
constexpr std::pair<std::string_view, Origin> kOrigins[] = {{"llm", Origin::Llm}, {"human", Origin::Human}};
constexpr std::pair<std::string_view, FollowupKind> kFollowups[] = {
    {"factcheck", FollowupKind::FactCheck}, {"social", FollowupKind::Social}, {"clarify", FollowupKind::Clarify}};
constexpr std::pair<std::string_view, RelevanceFeedback> kFeedback[] = {{"relevant", RelevanceFeedback::Relevant},
                                                                        {"irrelevant", RelevanceFeedback::Irrelevant},
                                                                        {"unset", RelevanceFeedback::Unset}};
constexpr std::pair<std::string_view, ReportStructure> kStructures[] = {
    {"by_criteria", ReportStructure::ByCriteria}, {"by_sentiment", ReportStructure::BySentiment}};

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum v, const std::pair<std::string_view, Enum> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "unset";
}

Anchor strip_search_state(Anchor a) {
    a.norm_range.reset();
    return a;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> read_optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

SavedOutput saved_output_from_json(const json& j) {
    return {parse_followup_kind(j.at("kind").get<std::string>()), read_optional_string(j, "question"),
            j.at("answer").get<std::string>(), j.value("saved_at", std::string{})};
}

Annotation annotation_from_json(const json& j) {
    Annotation a;
    a.id = j.at("id").get<std::string>();
    a.criterion_name = j.at("criterion").get<std::string>();
    a.excerpt = j.at("excerpt").get<std::string>();
    a.anchor = anchor_from_json(j.at("anchor"));
    for (const auto& c : j.value("candidates", json::array())) a.candidates.push_back(anchor_from_json(c));
    a.comments = j.value("comments", std::vector<std::string>{});
    a.sentiment = parse_sentiment(j.at("sentiment").get<std::string>());
    a.origin = parse_origin(j.at("origin").get<std::string>());
    for (const auto& s : j.value("saved_outputs", json::array())) a.saved_outputs.push_back(saved_output_from_json(s));
    a.relevance_feedback = parse_relevance_feedback(j.value("relevance_feedback", std::string("unset")));
    a.deemphasized = j.value("deemphasized", false);
    a.context_truncated = j.value("context_truncated", false);
    a.parse_warning = j.value("parse_warning", false);
    a.deleted = j.value("deleted", false);
    a.created_at = j.value("created_at", std::string{});
    a.updated_at = j.value("updated_at", std::string{});
    return a;
}

}  // namespace

std::string_view to_string(Sentiment v) { return enum_name(v, kSentiments); }
std::string_view to_string(Origin v) { return enum_name(v, kOrigins); }
std::string_view to_string(FollowupKind v) { return enum_name(v, kFollowups); }
std::string_view to_string(RelevanceFeedback v) { return enum_name(v, kFeedback); }
std::string_view to_string(ReportStructure v) { return enum_name(v, kStructures); }

Sentiment parse_sentiment(std::string_view s) { return parse_enum(s, kSentiments, "sentiment"); }
Origin parse_origin(std::string_view s) { return parse_enum(s, kOrigins, "origin"); }
FollowupKind parse_followup_kind(std::string_view s) { return parse_enum(s, kFollowups, "follow-up kind"); }
RelevanceFeedback parse_relevance_feedback(std::string_view s) { return parse_enum(s, kFeedback, "feedback verdict"); }
ReportStructure parse_report_structure(std::string_view s) { return parse_enum(s, kStructures, "report structure"); }

std::vector<const Annotation*> CriterionReview::live_annotations() const {
    std::vector<const Annotation*> live;
    for (const auto& a : annotations) {
        if (!a.deleted) live.push_back(&a);
    }
    return live;
}

// --- Recap -----------------------------------------------------------------

std::size_t Recap::item_count() const {
    std::size_t n = annotations.size();
    for (const auto& a : annotations) n += a.saved_outputs.size();
    return n;
}

std::string Recap::render() const {
    std::ostringstream out;
    out << "Recap: " << criterion << "\n";
    if (annotations.empty()) {
        out << "(no annotations yet)\n";
    }
    int index = 1;
    for (const auto& a : annotations) {
        out << index++ << ". [" << a.id << "] " << to_string(a.sentiment);
        if (a.anchor.page) out << " (p. " << *a.anchor.page << ")";
        if (a.origin == Origin::Human) out << " [reviewer]";
        out << "\n   \"" << a.excerpt << "\"\n";
        for (const auto& c : a.comments) out << "   - comment: " << c << "\n";
        for (const auto& s : a.saved_outputs) {
            out << "   - saved " << to_string(s.kind) << ": ";
            if (s.question) out << "Q: " << *s.question << " A: ";
            out << s.answer << "\n";
        }
    }
    if (compilation) out << "Compilation:\n" << *compilation << "\n";
    if (viewpoints) out << "Viewpoints:\n" << *viewpoints << "\n";
    return out.str();
}

// --- Review ----------------------------------------------------------------

Review::Review(std::string session_id, const CriteriaSet& criteria, Clock clock)
    : session_id_(std::move(session_id)), clock_(std::move(clock)) {
    for (const auto& c : criteria.criteria()) criterion_reviews_.push_back(CriterionReview{c, {}, {}, {}});
}

CriteriaSet Review::criteria() const {
    std::vector<CriteriaSet::Draft> drafts;
    for (const auto& cr : criterion_reviews_) {
        drafts.push_back({cr.criterion.name, cr.criterion.description, cr.criterion.recommendations, cr.criterion.color});
    }
    return CriteriaSet::create(std::move(drafts));
}

const CriterionReview& Review::criterion_review(std::string_view name) const {
    const auto key = criterion_key(name);
    for (const auto& cr : criterion_reviews_) {
        if (criterion_key(cr.criterion.name) == key) return cr;
    }
    throw Error(ErrorCode::UnknownCriterion, "criterion '" + std::string(name) + "' is not configured");
}

CriterionReview& Review::mutable_review(std::string_view name) {
    return const_cast<CriterionReview&>(std::as_const(*this).criterion_review(name));
}

Annotation Review::add_annotation(NewAnnotation fields) {
    auto& cr = mutable_review(fields.criterion_name);
    if (trim(fields.excerpt).empty()) throw Error(ErrorCode::EmptyExcerpt, "annotation excerpt is empty");
    if (fields.origin == Origin::Human && fields.anchor.kind != MatchKind::Exact) {
        throw Error(ErrorCode::InvalidArgument, "reviewer annotations must anchor exactly in the manuscript");
    }

    Annotation a;
    a.id = "a" + std::to_string(next_id_++);
    a.criterion_name = cr.criterion.name;
    a.excerpt = std::move(fields.excerpt);
    a.anchor = strip_search_state(fields.anchor);
    for (const auto& c : fields.candidates) a.candidates.push_back(strip_search_state(c));
    if (fields.comment && !trim(*fields.comment).empty()) a.comments.push_back(*fields.comment);
    a.sentiment = fields.sentiment;
    a.origin = fields.origin;
    a.context_truncated = fields.context_truncated;
    a.parse_warning = fields.parse_warning;
    a.created_at = now();
    a.updated_at = a.created_at;
    cr.annotations.push_back(a);
    return a;
}

Annotation Review::add_annotation(std::string_view criterion_name, std::string_view excerpt, const Anchor& anchor,
                                  Sentiment sentiment, Origin origin) {
    NewAnnotation fields;
    fields.criterion_name = std::string(criterion_name);
    fields.excerpt = std::string(excerpt);
    fields.anchor = anchor;
    fields.sentiment = sentiment;
    fields.origin = origin;
    return add_annotation(std::move(fields));
}

const Annotation& Review::annotation(std::string_view id) const {
    for (const auto& cr : criterion_reviews_) {
        for (const auto& a : cr.annotations) {
            if (a.id == id) return a;
        }
    }
    throw Error(ErrorCode::UnknownAnnotation, "no annotation '" + std::string(id) + "'");
}

Annotation& Review::live_annotation(std::string_view id) {
    auto& a = const_cast<Annotation&>(annotation(id));
    if (a.deleted) throw Error(ErrorCode::UnknownAnnotation, "annotation '" + std::string(id) + "' was removed");
    return a;
}

Annotation Review::update_sentiment(std::string_view id, Sentiment sentiment) {
    auto& a = live_annotation(id);
    a.sentiment = sentiment;
    a.updated_at = now();
    return a;
}

Annotation Review::add_comment(std::string_view id, std::string_view comment) {
    auto& a = live_annotation(id);
    if (trim(comment).empty()) throw Error(ErrorCode::EmptyComment, "comment is empty");
    a.comments.emplace_back(comment);
    a.updated_at = now();
    return a;
}

Annotation Review::save_output(std::string_view id, FollowupKind kind, std::optional<std::string> question,
                               std::string answer) {
    auto& a = live_annotation(id);
    a.saved_outputs.push_back({kind, std::move(question), std::move(answer), now()});
    a.updated_at = a.saved_outputs.back().saved_at;
    return a;
}

Annotation Review::set_relevance_feedback(std::string_view id, RelevanceFeedback verdict) {
    auto& a = live_annotation(id);
    a.relevance_feedback = verdict;
    a.deemphasized = verdict == RelevanceFeedback::Irrelevant;
    a.updated_at = now();
    return a;
}

Annotation Review::remove_annotation(std::string_view id) {
    auto& a = live_annotation(id);
    a.deleted = true;
    a.updated_at = now();
    return a;
}

void Review::set_compilation(std::string_view criterion_name, std::string text) {
    auto& cr = mutable_review(criterion_name);
    if (cr.annotations.empty()) {
        throw Error(ErrorCode::NoAnnotations, "criterion '" + cr.criterion.name + "' has no annotations");
    }
    cr.compilation = std::move(text);
}

void Review::set_viewpoints(std::string_view criterion_name, std::string text) {
    auto& cr = mutable_review(criterion_name);
    if (cr.annotations.empty()) {
        throw Error(ErrorCode::NoAnnotations, "criterion '" + cr.criterion.name + "' has no annotations");
    }
    cr.viewpoints = std::move(text);
}

std::vector<const Annotation*> Review::annotations() const {
    std::vector<const Annotation*> all;
    for (const auto& cr : criterion_reviews_) {
        for (const auto* a : cr.live_annotations()) all.push_back(a);
    }
    // ids are "a<seq>"; creation order is numeric order
    std::sort(all.begin(), all.end(), [](const Annotation* x, const Annotation* y) {
        return std::stoull(x->id.substr(1)) < std::stoull(y->id.substr(1));
    });
    return all;
}

std::size_t Review::live_annotation_count() const {
    std::size_t n = 0;
    for (const auto& cr : criterion_reviews_) n += cr.live_annotations().size();
    return n;
}

void Review::replace_criteria(const CriteriaSet& criteria) {
    std::vector<CriterionReview> next;
    std::set<std::string> removed_ids;
    std::vector<bool> kept(criterion_reviews_.size(), false);
    for (const auto& c : criteria.criteria()) {
        const auto key = criterion_key(c.name);
        CriterionReview cr{c, {}, {}, {}};
        for (std::size_t i = 0; i < criterion_reviews_.size(); ++i) {
            if (criterion_key(criterion_reviews_[i].criterion.name) != key) continue;
            cr.annotations = std::move(criterion_reviews_[i].annotations);
            cr.compilation = std::move(criterion_reviews_[i].compilation);
            cr.viewpoints = std::move(criterion_reviews_[i].viewpoints);
            for (auto& a : cr.annotations) a.criterion_name = c.name;
            kept[i] = true;
        }
        next.push_back(std::move(cr));
    }
    for (std::size_t i = 0; i < criterion_reviews_.size(); ++i) {
        if (kept[i]) continue;
        for (const auto& a : criterion_reviews_[i].annotations) removed_ids.insert(a.id);
    }
    criterion_reviews_ = std::move(next);
    if (report_) {
        for (const auto& s : report_->sections) {
            if (std::any_of(s.cited_annotation_ids.begin(), s.cited_annotation_ids.end(),
                            [&](const std::string& id) { return removed_ids.count(id) != 0; })) {
                report_.reset();
                break;
            }
        }
    }
}

void Review::set_report(ReviewReport report) {
    for (const auto& s : report.sections) {
        for (const auto& id : s.cited_annotation_ids) (void)annotation(id);
    }
    report_ = std::move(report);
}

Recap Review::recap(std::string_view criterion_name) const {
    const auto& cr = criterion_review(criterion_name);
    Recap r;
    r.criterion = cr.criterion.name;
    for (const auto* a : cr.live_annotations()) r.annotations.push_back(*a);
    r.compilation = cr.compilation;
    r.viewpoints = cr.viewpoints;
    return r;
}

SentimentPartition Review::partition_by_sentiment() const {
    SentimentPartition p;
    for (const auto* a : annotations()) {
        switch (a->sentiment) {
            case Sentiment::Strength: p.strengths.push_back(a); break;
            case Sentiment::Weakness: p.weaknesses.push_back(a); break;
            case Sentiment::Unset: p.unclassified.push_back(a); break;
        }
    }
    return p;
}

// --- JSON ------------------------------------------------------------------

json anchor_to_json(const Anchor& anchor) {
    if (!anchor.anchored() || !anchor.raw_range) {
        return {{"start", nullptr}, {"end", nullptr}, {"page", nullptr}, {"kind", "unanchored"}, {"ratio", nullptr}};
    }
    return {{"start", anchor.raw_range->begin},
            {"end", anchor.raw_range->end},
            {"page", anchor.page ? json(*anchor.page) : json(nullptr)},
            {"kind", to_string(anchor.kind)},
            {"ratio", anchor.ratio}};
}

Anchor anchor_from_json(const json& j) {
    Anchor a;
    a.kind = parse_match_kind(j.at("kind").get<std::string>());
    if (a.kind == MatchKind::Unanchored) return a;
    a.raw_range = IndexRange{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
    if (!j.at("page").is_null()) a.page = j.at("page").get<int>();
    a.ratio = j.at("ratio").get<double>();
    return a;
}

json annotation_to_json(const Annotation& a) {
    json saved = json::array();
    for (const auto& s : a.saved_outputs) {
        saved.push_back({{"kind", to_string(s.kind)},
                         {"question", optional_string(s.question)},
                         {"answer", s.answer},
                         {"saved_at", s.saved_at}});
    }
    json candidates = json::array();
    for (const auto& c : a.candidates) candidates.push_back(anchor_to_json(c));
    return {
        {"id", a.id},
        {"criterion", a.criterion_name},
        {"excerpt", a.excerpt},
        {"anchor", anchor_to_json(a.anchor)},
        {"candidates", std::move(candidates)},
        {"comments", a.comments},
        {"sentiment", to_string(a.sentiment)},
        {"origin", to_string(a.origin)},
        {"saved_outputs", std::move(saved)},
        {"relevance_feedback", to_string(a.relevance_feedback)},
        {"deemphasized", a.deemphasized},
        {"context_truncated", a.context_truncated},
        {"parse_warning", a.parse_warning},
        {"deleted", a.deleted},
        {"created_at", a.created_at},
        {"updated_at", a.updated_at},
    };
}

json report_to_json(const ReviewReport& r) {
    json sections = json::array();
    for (const auto& s : r.sections) {
        sections.push_back({{"heading", s.heading}, {"body", s.body}, {"cited_annotation_ids", s.cited_annotation_ids},
                            {"summary", s.summary}});
    }
    return {{"structure", to_string(r.structure)},
            {"preamble", optional_string(r.preamble)},
            {"sections", std::move(sections)},
            {"generated_at", r.generated_at},
            {"editable_body", r.editable_body}};
}

json Review::to_json() const {
    json reviews = json::array();
    for (const auto& cr : criterion_reviews_) {
        json annotations = json::array();
        for (const auto& a : cr.annotations) annotations.push_back(annotation_to_json(a));
        json criterion{{"name", cr.criterion.name},
                       {"description", cr.criterion.description},
                       {"recommendations", cr.criterion.recommendations},
                       {"color", cr.criterion.color.hex()}};
        reviews.push_back({{"criterion", std::move(criterion)},
                           {"annotations", std::move(annotations)},
                           {"compilation", optional_string(cr.compilation)},
                           {"viewpoints", optional_string(cr.viewpoints)}});
    }
    return {{"schema_version", 1},
            {"session_id", session_id_},
            {"next_annotation_seq", next_id_},
            {"criterion_reviews", std::move(reviews)},
            {"report", report_ ? report_to_json(*report_) : json(nullptr)}};
}

Review Review::from_json(const json& doc, Clock clock) {
    try {
        std::vector<CriteriaSet::Draft> drafts;
        for (const auto& cr : doc.at("criterion_reviews")) {
            const auto& c = cr.at("criterion");
            drafts.push_back({c.at("name").get<std::string>(), c.at("description").get<std::string>(),
                              c.value("recommendations", std::vector<std::string>{}),
                              Color::parse(c.at("color").get<std::string>())});
        }
        Review review(doc.at("session_id").get<std::string>(), CriteriaSet::create(std::move(drafts)),
                      std::move(clock));
        review.next_id_ = doc.at("next_annotation_seq").get<std::uint64_t>();
        std::size_t i = 0;
        for (const auto& cr : doc.at("criterion_reviews")) {
            auto& target = review.criterion_reviews_[i++];
            for (const auto& a : cr.at("annotations")) target.annotations.push_back(annotation_from_json(a));
            target.compilation = read_optional_string(cr, "compilation");
            target.viewpoints = read_optional_string(cr, "viewpoints");
        }
        if (doc.contains("report") && !doc.at("report").is_null()) {
            const auto& r = doc.at("report");
            ReviewReport report;
            report.structure = parse_report_structure(r.at("structure").get<std::string>());
            report.preamble = read_optional_string(r, "preamble");
            report.generated_at = r.value("generated_at", std::string{});
            report.editable_body = r.value("editable_body", std::string{});
            for (const auto& s : r.at("sections")) {
                report.sections.push_back({s.at("heading").get<std::string>(), s.at("body").get<std::string>(),
                                           s.at("cited_annotation_ids").get<std::vector<std::string>>(),
                                           s.value("summary", std::string{})});
            }
            review.set_report(std::move(report));
        }
        return review;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed review.json: ") + e.what());
    }
}

}  // namespace annoreview
