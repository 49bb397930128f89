#include "annoreview/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "annoreview/error.hpp"
#include "annoreview/text.hpp"

using nlohmann::json;

namespace annoreview {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kDefaultPrompts[];
extern const std::size_t kDefaultPromptCount;
}  // namespace detail

namespace {

constexpr std::pair<std::string_view, TemplateName> kTemplateNames[] = {
    {"annotate", TemplateName::Annotate},
    {"factcheck", TemplateName::FactCheck},
    {"social", TemplateName::Social},
    {"clarify", TemplateName::Clarify},
    {"compile", TemplateName::Compile},
    {"viewpoints", TemplateName::Viewpoints},
    {"report_by_criteria", TemplateName::ReportByCriteria},
    {"report_by_sentiment", TemplateName::ReportBySentiment},
};

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_' || (c >= '0' && c <= '9'); }

std::string_view followup_label(FollowupKind k) {
    switch (k) {
        case FollowupKind::FactCheck: return "fact-check";
        case FollowupKind::Social: return "social judgment";
        case FollowupKind::Clarify: return "clarification";
    }
    return "follow-up";
}

void append_annotation(std::ostringstream& out, std::size_t index, const Annotation& a, bool with_criterion) {
    out << "[" << index << "] id=" << a.id;
    if (with_criterion) out << " criterion=" << a.criterion_name;
    out << " sentiment=" << to_string(a.sentiment);
    if (a.anchor.page) out << " page=" << *a.anchor.page;
    out << "\n";
    out << "Excerpt: \"" << a.excerpt << "\"\n";
    for (const auto& c : a.comments) out << "Comment: " << c << "\n";
    for (const auto& s : a.saved_outputs) {
        out << "Saved " << followup_label(s.kind);
        if (s.question) out << " (question: " << *s.question << ")";
        out << ": " << s.answer << "\n";
    }
}

// Skips a ``` fence and returns what is inside it, or the input when no
// fence is present.
std::string_view strip_fences(std::string_view raw) {
    const auto open = raw.find("```");
    if (open == std::string_view::npos) return raw;
    auto body_start = raw.find('\n', open + 3);
    if (body_start == std::string_view::npos) return raw.substr(open + 3);
    ++body_start;
    const auto close = raw.find("```", body_start);
    if (close == std::string_view::npos) return raw.substr(body_start);
    return raw.substr(body_start, close - body_start);
}

// First bracket-balanced JSON array or object, string-literal aware.
std::optional<std::string_view> first_balanced(std::string_view s) {
    for (std::size_t start = 0; start < s.size(); ++start) {
        if (s[start] != '[' && s[start] != '{') continue;
        std::vector<char> stack;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < s.size(); ++i) {
            const char c = s[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[' || c == '{') {
                stack.push_back(c == '[' ? ']' : '}');
            } else if (c == ']' || c == '}') {
                if (stack.empty() || stack.back() != c) break;
                stack.pop_back();
                if (stack.empty()) return s.substr(start, i - start + 1);
            }
        }
    }
    return std::nullopt;
}

std::string remove_trailing_commas(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            out.push_back(c);
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') in_string = true;
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && (s[j] == ']' || s[j] == '}')) continue;
        }
        out.push_back(c);
    }
    return out;
}

const json* item_list(const json& doc) {
    if (doc.is_array()) return &doc;
    if (!doc.is_object()) return nullptr;
    for (const char* key : {"items", "excerpts", "annotations"}) {
        if (doc.contains(key) && doc.at(key).is_array()) return &doc.at(key);
    }
    return nullptr;
}

AnnotateResponse parse_items(std::string_view raw, const json& doc, std::size_t num_excerpts) {
    json single;
    const json* list = item_list(doc);
    if (list == nullptr) {
        if (!doc.is_object() || !doc.contains("excerpt")) {
            throw Error(ErrorCode::UnparseableResponse, "response JSON is not a list of excerpt items");
        }
        single = json::array({doc});
        list = &single;
    }
    if (list->empty()) throw Error(ErrorCode::EmptyItems, "response contains no items");

    AnnotateResponse out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const json& item = (*list)[i];
        const std::string where = "item " + std::to_string(i + 1);
        if (!item.is_object() || !item.contains("excerpt") || !item.at("excerpt").is_string()) {
            out.warnings.push_back(where + ": missing excerpt, skipped");
            continue;
        }
        AnnotateItem parsed;
        parsed.excerpt = trim(item.at("excerpt").get<std::string>());
        if (parsed.excerpt.empty()) {
            out.warnings.push_back(where + ": empty excerpt, skipped");
            continue;
        }
        if (raw.find(parsed.excerpt) == std::string_view::npos) {
            out.warnings.push_back(where + ": excerpt is not verbatim in the response, skipped");
            continue;
        }
        std::string sentiment;
        if (item.contains("sentiment") && item.at("sentiment").is_string()) {
            sentiment = trim(item.at("sentiment").get<std::string>());
            std::transform(sentiment.begin(), sentiment.end(), sentiment.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        }
        if (sentiment == "strength") {
            parsed.sentiment = Sentiment::Strength;
        } else if (sentiment == "weakness") {
            parsed.sentiment = Sentiment::Weakness;
        } else {
            parsed.unknown_sentiment = true;
            out.warnings.push_back(where + ": unknown sentiment, left unset");
        }
        if (item.contains("comment") && item.at("comment").is_string()) {
            auto comment = trim(item.at("comment").get<std::string>());
            if (!comment.empty()) parsed.comment = std::move(comment);
        }
        out.items.push_back(std::move(parsed));
    }
    if (out.items.empty()) throw Error(ErrorCode::EmptyItems, "response contains no usable items");
    const std::size_t limit = std::max<std::size_t>(1, num_excerpts);
    if (out.items.size() > limit) {
        out.warnings.push_back("response had " + std::to_string(out.items.size()) + " items, kept " +
                               std::to_string(limit));
        out.items.resize(limit);
    }
    return out;
}

}  // namespace

std::string_view to_string(TemplateName name) {
    for (const auto& [s, v] : kTemplateNames) {
        if (v == name) return s;
    }
    return "annotate";
}

TemplateName parse_template_name(std::string_view s) {
    for (const auto& [name, v] : kTemplateNames) {
        if (name == s) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown template '" + std::string(s) + "'");
}

TemplateName template_for(FollowupKind kind) {
    switch (kind) {
        case FollowupKind::FactCheck: return TemplateName::FactCheck;
        case FollowupKind::Social: return TemplateName::Social;
        case FollowupKind::Clarify: return TemplateName::Clarify;
    }
    return TemplateName::Clarify;
}

const std::set<std::string, std::less<>>& placeholder_vocabulary() {
    static const std::set<std::string, std::less<>> vocab{
        "criterion_name",  "criterion_description", "recommendations",    "num_excerpts",
        "excerpt",         "question",              "annotations_digest", "manuscript_text",
    };
    return vocab;
}

PromptTemplate PromptTemplate::parse(TemplateName name, std::string body) {
    PromptTemplate t;
    t.name_ = name;
    std::string literal;
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
            literal.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
            literal.push_back('}');
            ++i;
        } else if (c == '{') {
            std::size_t j = i + 1;
            while (j < body.size() && is_name_char(body[j])) ++j;
            if (j == i + 1 || j >= body.size() || body[j] != '}') {
                throw Error(ErrorCode::UnknownPlaceholder, std::string(to_string(name)) +
                                                               ": malformed placeholder near offset " +
                                                               std::to_string(i));
            }
            std::string placeholder = body.substr(i + 1, j - i - 1);
            if (placeholder_vocabulary().count(placeholder) == 0) {
                throw Error(ErrorCode::UnknownPlaceholder,
                            std::string(to_string(name)) + ": unknown placeholder {" + placeholder + "}");
            }
            if (!literal.empty()) t.pieces_.push_back({false, std::move(literal)});
            literal.clear();
            t.placeholders_.insert(placeholder);
            t.pieces_.push_back({true, std::move(placeholder)});
            i = j;
        } else if (c == '}') {
            throw Error(ErrorCode::UnknownPlaceholder,
                        std::string(to_string(name)) + ": unmatched '}' at offset " + std::to_string(i));
        } else {
            literal.push_back(c);
        }
    }
    if (!literal.empty()) t.pieces_.push_back({false, std::move(literal)});
    t.body_ = std::move(body);
    return t;
}

std::string PromptTemplate::render(const Bindings& bindings) const {
    for (const auto& p : pieces_) {
        if (p.is_placeholder && bindings.find(p.text) == bindings.end()) {
            throw Error(ErrorCode::MissingBinding,
                        std::string(to_string(name_)) + " needs a binding for {" + p.text + "}");
        }
    }
    std::string out;
    for (const auto& p : pieces_) out += p.is_placeholder ? bindings.find(p.text)->second : p.text;
    return out;
}

std::string_view default_template_text(TemplateName name) {
    const auto key = to_string(name);
    for (std::size_t i = 0; i < detail::kDefaultPromptCount; ++i) {
        if (detail::kDefaultPrompts[i].first == key) return detail::kDefaultPrompts[i].second;
    }
    throw Error(ErrorCode::NotFound, "no built-in template '" + std::string(key) + "'");
}

PromptLibrary PromptLibrary::defaults() {
    PromptLibrary lib;
    for (auto name : kAllTemplates) {
        lib.templates_.emplace(name, PromptTemplate::parse(name, std::string(default_template_text(name))));
    }
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw Error(ErrorCode::NotFound, "prompt directory not found: " + directory.string());
    }
    PromptLibrary lib = defaults();
    for (auto name : kAllTemplates) {
        const auto path = directory / (std::string(to_string(name)) + ".txt");
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
        std::ostringstream body;
        body << in.rdbuf();
        lib.templates_.insert_or_assign(name, PromptTemplate::parse(name, body.str()));
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateName name) const { return templates_.at(name); }

AnnotateResponse parse_annotate_response(std::string_view raw, std::size_t num_excerpts) {
    try {
        const auto candidate = first_balanced(strip_fences(raw));
        if (!candidate) throw Error(ErrorCode::UnparseableResponse, "no JSON array or object in response");
        json doc = json::parse(*candidate, nullptr, false);
        if (doc.is_discarded()) doc = json::parse(remove_trailing_commas(*candidate), nullptr, false);
        if (doc.is_discarded()) throw Error(ErrorCode::UnparseableResponse, "response JSON does not parse");
        return parse_items(raw, doc, num_excerpts);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::UnparseableResponse, e.what());
    }
}

std::string digest_annotations(const CriterionReview& review) {
    const auto live = review.live_annotations();
    if (live.empty()) {
        throw Error(ErrorCode::NoAnnotations, "criterion '" + review.criterion.name + "' has no annotations");
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < live.size(); ++i) {
        if (i > 0) out << "\n";
        append_annotation(out, i + 1, *live[i], false);
    }
    return out.str();
}

std::string digest_annotation_list(const std::vector<const Annotation*>& annotations) {
    std::ostringstream out;
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        if (i > 0) out << "\n";
        append_annotation(out, i + 1, *annotations[i], true);
    }
    return out.str();
}

std::string format_recommendations(const std::vector<std::string>& recommendations) {
    if (recommendations.empty()) return "- (no specific recommendations)";
    std::string out;
    for (const auto& r : recommendations) {
        if (!out.empty()) out += "\n";
        out += "- " + r;
    }
    return out;
}

FittedText fit_to_budget(std::string_view text, std::size_t max_chars) {
    const auto cps = utf8_to_u32(text);
    if (cps.size() <= max_chars) return {std::string(text), false};
    const std::size_t head = max_chars * 2 / 3;
    const std::size_t tail = max_chars - head;
    std::string out = u32_to_utf8(std::u32string_view(cps).substr(0, head));
    out += "\n[... middle of the manuscript omitted ...]\n";
    out += u32_to_utf8(std::u32string_view(cps).substr(cps.size() - tail));
    return {std::move(out), true};
}

}  // namespace annoreview
